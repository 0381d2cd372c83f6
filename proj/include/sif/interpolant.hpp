#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sif/drift.hpp"
#include "sif/schedule.hpp"
#include "sif/threading.hpp"

namespace sif {

// One observed transition: conditioning state x0 and target state x1.
struct SamplePair {
    std::vector<double> x0;
    std::vector<double> x1;
};

// A bridge sample at generation time s:
//   point  = alpha*x0 + beta*x1 + sqrt(s)*sigma*z
//   target = dalpha*x0 + dbeta*x1 + sqrt(s)*dsigma*z
struct InterpolantDraw {
    double s;
    std::vector<double> noise;   // z
    std::vector<double> point;   // the regression input
    std::vector<double> target;  // the regression target
};

// Flat view over a batch of pairs (row-major count x dim each).
struct PairsView {
    std::span<const double> x0;
    std::span<const double> x1;
    int dim = 0;
    std::int64_t count = 0;
};

void interpolate_into(const Schedule& sched, std::span<const double> x0,
                      std::span<const double> x1, double s, std::span<const double> z,
                      std::span<double> point, std::span<double> target);

InterpolantDraw interpolate(const Schedule& sched, const SamplePair& pair, double s,
                            std::span<const double> z);

// Mean squared regression error of `drift` over the batch:
//   (1/K) sum_k |b(s_k, point_k, x0_k) - target_k|^2
// s_draws has length K; z_draws is row-major K x dim. The sum uses a fixed
// pairwise tree so serial and parallel execution agree bitwise.
double empirical_loss(const Schedule& sched, const DriftField& drift, PairsView batch,
                      std::span<const double> s_draws, std::span<const double> z_draws,
                      Exec exec = Exec::parallel);

}  // namespace sif
