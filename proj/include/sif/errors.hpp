#pragma once

#include <stdexcept>
#include <string>

namespace sif {

// Raised when a computation goes numerically bad at runtime (NaN loss,
// solver blow-up, responsibility underflow). The CLI maps this to exit 3;
// config/shape problems use std::invalid_argument / std::domain_error and
// map to exit 2.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sif
