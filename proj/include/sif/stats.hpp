#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sif/threading.hpp"

namespace sif {

// Gaussian-kernel density estimate on a fixed evaluation grid.
struct Kde1d {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;

    // bandwidth <= 0 selects Scott's rule  h = std * n^{-1/5}; the grid spans
    // [lo - 3h, hi + 3h] with `grid_points` nodes unless an explicit range is
    // given. Throws std::invalid_argument on degenerate samples.
    static Kde1d fit(std::span<const double> samples, int grid_points = 512,
                     double bandwidth = 0.0, Exec exec = Exec::parallel);
    static Kde1d fit_on_grid(std::span<const double> samples,
                             std::span<const double> grid, double bandwidth,
                             Exec exec = Exec::parallel);

    double integral() const;  // trapezoid mass over the grid
};

struct KdeKlResult {
    double kl = 0.0;
    double bootstrap_std = 0.0;
    std::vector<double> grid;
    std::vector<double> density_p;
    std::vector<double> density_q;
};

// KL(p || q) between Gaussian KDEs of the two sample sets on a shared grid
// (data range of the union +- 3 bandwidths, 512 nodes, floor 1e-12 before the
// log). The reported std is over `n_bootstrap` paired resamples.
KdeKlResult kde_kl(std::span<const double> samples_p, std::span<const double> samples_q,
                   int grid_points = 512, int n_bootstrap = 100, std::uint64_t seed = 0,
                   Exec exec = Exec::parallel);

struct ErrorReport {
    double err_mean = 0.0;
    double err_std = 0.0;
    // When the reference mean norm is ~0, err_mean holds the absolute error
    // and this flag is set.
    bool mean_reference_near_zero = false;
};

// Relative L2 errors of fieldwise ensemble mean and standard deviation against
// a reference sample set: ||m_hat - m|| / ||m|| and ||s_hat - s|| / ||s||.
ErrorReport conditional_moment_errors(std::span<const double> ensemble, std::int64_t m,
                                      std::span<const double> reference, std::int64_t r,
                                      int dim);

// Two-sample energy statistic 2 E|A-B| - E|A-A'| - E|B-B'| (V-statistic form).
double energy_distance(std::span<const double> a, std::int64_t na,
                       std::span<const double> b, std::int64_t nb, int dim,
                       Exec exec = Exec::parallel);

// Permutation test on the energy statistic; returns the p-value
// (1 + #{perm >= observed}) / (1 + n_permutations).
double energy_distance_test(std::span<const double> a, std::int64_t na,
                            std::span<const double> b, std::int64_t nb, int dim,
                            int n_permutations, std::uint64_t seed = 0,
                            Exec exec = Exec::parallel);

// Sample mean / unbiased variance helpers used throughout the test suites.
double mean_of(std::span<const double> v);
double variance_of(std::span<const double> v);  // unbiased

}  // namespace sif
