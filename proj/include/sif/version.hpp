#pragma once

#include <string_view>

namespace sif {
inline constexpr std::string_view kVersion = "0.1.0";
}
