#pragma once

#include <cstdint>
#include <span>

#include "sif/dataset.hpp"
#include "sif/gmm.hpp"
#include "sif/rng.hpp"

namespace sif {

// Planar Langevin dynamics in the log-density of a mixture, kicked
// counterclockwise by 2*pi/5 at Poisson times: one Euler step
//   x' = x + dt * grad log rho(x) + sqrt(2 dt) * xi,
// followed by the rotation with probability jump_rate * dt.
struct JumpDiffusionConfig {
    GmmSpec invariant = GmmSpec::five_mode_ring();
    double jump_rate = 2.0;
    double dt = 0.01;
    double lag = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

// Counterclockwise rotation by 2*pi/5 (the kick applied at jump times).
void rotate_fifth(std::span<double> state);

// Reusable stepper with per-component precision matrices precomputed, for the
// multi-million-step simulation loops.
class JumpDiffusionSimulator {
public:
    explicit JumpDiffusionSimulator(const JumpDiffusionConfig& cfg);

    // One step; consumes exactly 2 normals then 1 uniform from the stream
    // whether or not the jump fires.
    void step(std::span<double> state, rng::Stream& stream) const;

    void log_density_grad(std::span<const double> x, std::span<double> out) const;

private:
    struct Component {
        double m0, m1;
        double p00, p01, p11;  // precision (inverse covariance)
        double log_norm;       // log w - (log det C)/2 - log(2 pi)
    };
    double jump_prob_;
    double dt_;
    std::vector<Component> comps_;
};

// Single-shot convenience wrapper around JumpDiffusionSimulator::step.
void jump_diffusion_step(std::span<double> state, const JumpDiffusionConfig& cfg,
                         rng::Stream& stream);

// Integrates one long trajectory, drops burn_in time units, then emits
// n_pairs overlapping pairs (x_t, x_{t+lag}) sampled every cfg.lag.
TransitionDataset simulate_jump_diffusion(const JumpDiffusionConfig& cfg,
                                          std::int64_t n_pairs, double burn_in);

}  // namespace sif
