#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sif::io {

// Repo-wide binary array format (see docs/formats.md):
//   magic "SIFARR1\0", u32 version, u32 ndim, u64 shape[ndim], f64 data[...]
// all little-endian, row-major.
struct Array {
    std::vector<std::int64_t> shape;
    std::vector<double> data;

    std::int64_t count() const noexcept {
        std::int64_t c = 1;
        for (auto s : shape) c *= s;
        return c;
    }
};

void write_array(const std::string& path, std::span<const double> data,
                 std::span<const std::int64_t> shape);
Array read_array(const std::string& path);

// FNV-1a over a text blob; used for config hashes in manifests.
std::uint64_t fnv1a(std::string_view text) noexcept;

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace sif::io
