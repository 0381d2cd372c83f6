#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sif/interpolant.hpp"

namespace sif {

// Lag-tau transition pairs extracted from a trajectory (or many), flattened
// row-major. On disk: pairs.bin holding shape [n, 2, dim] (x0 row then x1 row
// per pair) next to manifest.json with lag, normalization and provenance.
struct TransitionDataset {
    int dim = 0;
    double lag = 0.0;
    double normalization_scale = 1.0;
    std::string task;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::vector<double> x0;  // n x dim
    std::vector<double> x1;  // n x dim
    std::string extra_json;  // task-specific manifest fields (may be empty)

    std::int64_t size() const noexcept {
        return dim == 0 ? 0 : static_cast<std::int64_t>(x0.size()) / dim;
    }
    PairsView view() const noexcept { return {x0, x1, dim, size()}; }

    void save(const std::string& dir) const;
    static TransitionDataset load(const std::string& dir);
};

}  // namespace sif
