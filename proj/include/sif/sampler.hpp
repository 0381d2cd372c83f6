#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sif/drift.hpp"
#include "sif/gmm.hpp"
#include "sif/schedule.hpp"
#include "sif/threading.hpp"

namespace sif {

// Euler-Maruyama configuration for the generation-time SDE. The grid must be
// strictly increasing with endpoints exactly 0 and 1.
struct SamplerConfig {
    int steps = 200;                   // ignored when grid is supplied
    std::vector<double> grid;          // optional explicit s-grid
    std::int64_t ensemble = 1;         // members (M)
    std::uint64_t seed = 0;

    std::vector<double> resolved_grid() const;
    void validate() const;
};

struct ForecastEnsemble {
    int dim = 0;
    std::int64_t members = 0;
    std::vector<double> samples;  // members x dim
    std::string model_id;
    std::vector<double> x0;
    std::uint64_t config_hash = 0;

    std::span<const double> member(std::int64_t m) const {
        return {samples.data() + m * dim, static_cast<std::size_t>(dim)};
    }
};

// Observes the state after reaching grid node `node` (1-based first move).
using StateObserver = std::function<void(std::size_t node, std::span<const double> state)>;

// One trajectory of the forecasting SDE. The first step moves with the raw
// drift at s=0 and the reference noise amplitude sigma; every later step uses
// the diffusion-adjusted drift and g. Noise for step n, coordinate i is the
// counter cell (noise_key, n*dim + i), so members are order-independent.
// Throws NumericError if the state leaves the finite range.
void sample_path(const DriftField& drift, const DiffusionSchedule& diffusion,
                 std::span<const double> grid, std::span<const double> x0,
                 std::uint64_t noise_key, std::span<double> out,
                 const StateObserver* observer = nullptr);

// Single draw with the config's seed (member index 0).
std::vector<double> sample_one(const DriftField& drift, const DiffusionSchedule& diffusion,
                               const SamplerConfig& cfg, std::span<const double> x0);

// M independent draws; member m uses stream key (seed, m). Deterministic for a
// fixed seed regardless of thread count.
ForecastEnsemble sample_ensemble(const DriftField& drift, const DiffusionSchedule& diffusion,
                                 const SamplerConfig& cfg, std::span<const double> x0,
                                 Exec exec = Exec::parallel);

// Autoregressive chain: each terminal sample becomes the next conditioning
// state. Returns n_lags states of dim entries each (flattened).
std::vector<double> rollout(const DriftField& drift, const DiffusionSchedule& diffusion,
                            const SamplerConfig& cfg, std::span<const double> x0,
                            int n_lags);

// Independent chains rolled out in parallel; result[j] is the ensemble at lag
// j+1. Member m of lag j uses stream key (seed, m, j).
std::vector<ForecastEnsemble> rollout_ensemble(const DriftField& drift,
                                               const DiffusionSchedule& diffusion,
                                               const SamplerConfig& cfg,
                                               std::span<const double> x0, int n_lags,
                                               Exec exec = Exec::parallel);

struct PathKlEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::vector<double> s_nodes;
    std::vector<double> weights;  // |1 + 1/2 beta A (g^2-sigma^2)|^2 / (2 g^2) per node
};

// Monte-Carlo path KL divergence between the SDE driven by b_true and the one
// driven by b_hat, for mixture targets where the time-s marginal is known in
// closed form. s_grid must lie strictly inside (0,1); the quadrature is a
// trapezoid rule over the given nodes.
PathKlEstimate path_kl(const DriftField& b_true, const DriftField& b_hat,
                       const DiffusionSchedule& diffusion, const GmmSpec& spec,
                       std::span<const double> x0, std::int64_t n_mc,
                       std::span<const double> s_grid, std::uint64_t seed,
                       Exec exec = Exec::parallel);

struct MomentTrace {
    std::vector<double> s;         // grid nodes
    std::vector<double> mean;      // nodes x dim
    std::vector<double> variance;  // nodes x dim (per coordinate, unbiased)
};

// Integrates the Gaussian reference SDE
//   dY = a_s (Y - alpha_s x0) ds + dalpha_s x0 ds + g^F_s dW,  Y_0 = x0,
// and reports the empirical mean/variance at every grid node. The law at time
// s is N(alpha_s x0, (beta_s^2 + s sigma_s^2) I).
MomentTrace reference_process_check(const Schedule& sched, const SamplerConfig& cfg,
                                    std::span<const double> x0, std::int64_t members,
                                    Exec exec = Exec::parallel);

}  // namespace sif
