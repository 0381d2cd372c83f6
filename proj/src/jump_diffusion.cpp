#include "sif/jump_diffusion.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace sif {

void JumpDiffusionConfig::validate() const {
    invariant.validate();
    if (invariant.dim != 2)
        throw std::invalid_argument("JumpDiffusionConfig: process is planar (dim 2)");
    if (!(dt > 0.0) || !(lag > 0.0))
        throw std::invalid_argument("JumpDiffusionConfig: dt and lag must be positive");
    if (!(jump_rate * dt < 1.0))
        throw std::invalid_argument("JumpDiffusionConfig: jump_rate*dt must be < 1");
}

void rotate_fifth(std::span<double> state) {
    constexpr double th = 2.0 * std::numbers::pi / 5.0;
    const double c = std::cos(th), s = std::sin(th);
    const double xr = c * state[0] - s * state[1];
    const double yr = s * state[0] + c * state[1];
    state[0] = xr;
    state[1] = yr;
}

JumpDiffusionSimulator::JumpDiffusionSimulator(const JumpDiffusionConfig& cfg)
    : jump_prob_(cfg.jump_rate * cfg.dt), dt_(cfg.dt) {
    cfg.validate();
    const GmmSpec& spec = cfg.invariant;
    if (spec.components() > 16)
        throw std::invalid_argument("JumpDiffusionSimulator: at most 16 components");
    for (int j = 0; j < spec.components(); ++j) {
        const auto c = spec.covariance(j);
        const double det = c[0] * c[3] - c[1] * c[2];
        Component comp;
        comp.m0 = spec.means[j * 2];
        comp.m1 = spec.means[j * 2 + 1];
        comp.p00 = c[3] / det;
        comp.p01 = -c[1] / det;
        comp.p11 = c[0] / det;
        comp.log_norm = std::log(spec.weights[j]) - 0.5 * std::log(det) -
                        std::log(2.0 * std::numbers::pi);
        comps_.push_back(comp);
    }
}

void JumpDiffusionSimulator::log_density_grad(std::span<const double> x,
                                              std::span<double> out) const {
    double logw[16];
    double ux[16], uy[16];
    const int J = static_cast<int>(comps_.size());
    double max_lw = -1e300;
    for (int j = 0; j < J; ++j) {
        const Component& c = comps_[j];
        const double dx = x[0] - c.m0;
        const double dy = x[1] - c.m1;
        ux[j] = c.p00 * dx + c.p01 * dy;
        uy[j] = c.p01 * dx + c.p11 * dy;
        logw[j] = c.log_norm - 0.5 * (dx * ux[j] + dy * uy[j]);
        max_lw = std::max(max_lw, logw[j]);
    }
    double z = 0.0, gx = 0.0, gy = 0.0;
    for (int j = 0; j < J; ++j) {
        const double w = std::exp(logw[j] - max_lw);
        z += w;
        gx -= w * ux[j];
        gy -= w * uy[j];
    }
    out[0] = gx / z;
    out[1] = gy / z;
}

void JumpDiffusionSimulator::step(std::span<double> state, rng::Stream& stream) const {
    double grad[2];
    log_density_grad(state, grad);
    const double root = std::sqrt(2.0 * dt_);
    const double xi0 = stream.normal();
    const double xi1 = stream.normal();
    state[0] += dt_ * grad[0] + root * xi0;
    state[1] += dt_ * grad[1] + root * xi1;
    if (stream.uniform() < jump_prob_) rotate_fifth(state);
}

void jump_diffusion_step(std::span<double> state, const JumpDiffusionConfig& cfg,
                         rng::Stream& stream) {
    JumpDiffusionSimulator(cfg).step(state, stream);
}

TransitionDataset simulate_jump_diffusion(const JumpDiffusionConfig& cfg,
                                          std::int64_t n_pairs, double burn_in) {
    cfg.validate();
    if (n_pairs < 1) throw std::invalid_argument("simulate_jump_diffusion: n_pairs >= 1");
    const std::int64_t steps_per_lag =
        static_cast<std::int64_t>(std::llround(cfg.lag / cfg.dt));
    if (steps_per_lag < 1)
        throw std::invalid_argument("simulate_jump_diffusion: lag shorter than dt");
    const std::int64_t burn_steps =
        static_cast<std::int64_t>(std::llround(burn_in / cfg.dt));

    const JumpDiffusionSimulator sim(cfg);
    rng::Stream stream = rng::Stream::keyed(cfg.seed, 0x7d1f);
    double state[2] = {cfg.invariant.means[0], cfg.invariant.means[1]};
    for (std::int64_t i = 0; i < burn_steps; ++i) sim.step(state, stream);

    // n_pairs overlapping pairs need n_pairs + 1 snapshots.
    TransitionDataset ds;
    ds.dim = 2;
    ds.lag = cfg.lag;
    ds.task = "jump_diffusion";
    ds.seed = cfg.seed;
    ds.x0.resize(static_cast<std::size_t>(n_pairs) * 2);
    ds.x1.resize(static_cast<std::size_t>(n_pairs) * 2);
    double prev[2] = {state[0], state[1]};
    for (std::int64_t k = 0; k < n_pairs; ++k) {
        for (std::int64_t i = 0; i < steps_per_lag; ++i) sim.step(state, stream);
        ds.x0[k * 2] = prev[0];
        ds.x0[k * 2 + 1] = prev[1];
        ds.x1[k * 2] = state[0];
        ds.x1[k * 2 + 1] = state[1];
        prev[0] = state[0];
        prev[1] = state[1];
    }
    nlohmann::json extra;
    extra["jump_rate"] = cfg.jump_rate;
    extra["dt"] = cfg.dt;
    extra["burn_in"] = burn_in;
    ds.extra_json = extra.dump();
    return ds;
}

}  // namespace sif
