#include "sif/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sif/errors.hpp"
#include "sif/rng.hpp"

namespace sif {

std::vector<double> SamplerConfig::resolved_grid() const {
    if (!grid.empty()) return grid;
    std::vector<double> g(static_cast<std::size_t>(steps) + 1);
    for (int n = 0; n <= steps; ++n) g[n] = static_cast<double>(n) / steps;
    g.front() = 0.0;
    g.back() = 1.0;
    return g;
}

void SamplerConfig::validate() const {
    if (grid.empty()) {
        if (steps < 2) throw std::invalid_argument("SamplerConfig: need at least 2 steps");
    } else {
        if (grid.size() < 3) throw std::invalid_argument("SamplerConfig: grid too short");
        if (grid.front() != 0.0 || grid.back() != 1.0)
            throw std::invalid_argument("SamplerConfig: grid endpoints must be 0 and 1");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1]))
                throw std::invalid_argument("SamplerConfig: grid must be strictly increasing");
    }
    if (ensemble < 1) throw std::invalid_argument("SamplerConfig: ensemble must be >= 1");
}

void sample_path(const DriftField& drift, const DiffusionSchedule& diffusion,
                 std::span<const double> grid, std::span<const double> x0,
                 std::uint64_t noise_key, std::span<double> out,
                 const StateObserver* observer) {
    const int d = static_cast<int>(x0.size());
    const Schedule& sched = diffusion.reference();
    const std::size_t n_steps = grid.size() - 1;

    std::vector<double> state(x0.begin(), x0.end());
    std::vector<double> b(d), bg(d);

    // First step: raw drift at s0 evaluated at (x0, x0), noise amplitude sigma.
    {
        const double s0 = grid[0];
        const double ds = grid[1] - grid[0];
        const double sigma0 = sched.at(s0).sigma;
        drift.eval(s0, state, x0, b);
        const double root_ds = std::sqrt(ds);
        for (int i = 0; i < d; ++i)
            state[i] += b[i] * ds + sigma0 * root_ds * rng::normal_at(noise_key, i);
        if (observer) (*observer)(1, state);
    }

    for (std::size_t n = 1; n < n_steps; ++n) {
        const double s = grid[n];
        const double ds = grid[n + 1] - grid[n];
        drift.eval(s, state, x0, b);
        drift_for_diffusion(diffusion, b, s, state, x0, bg);
        const double g = diffusion.at(s);
        const double root_ds = std::sqrt(ds);
        bool finite = true;
        for (int i = 0; i < d; ++i) {
            state[i] += bg[i] * ds + g * root_ds * rng::normal_at(noise_key, n * d + i);
            finite = finite && std::isfinite(state[i]);
        }
        if (!finite)
            throw NumericError("sample_path: non-finite state at step " + std::to_string(n) +
                               " (s=" + std::to_string(s) + ")");
        if (observer) (*observer)(n + 1, state);
    }
    std::copy(state.begin(), state.end(), out.begin());
}

std::vector<double> sample_one(const DriftField& drift, const DiffusionSchedule& diffusion,
                               const SamplerConfig& cfg, std::span<const double> x0) {
    cfg.validate();
    const auto grid = cfg.resolved_grid();
    std::vector<double> out(x0.size());
    sample_path(drift, diffusion, grid, x0, rng::stream_key(cfg.seed, 0), out);
    return out;
}

ForecastEnsemble sample_ensemble(const DriftField& drift, const DiffusionSchedule& diffusion,
                                 const SamplerConfig& cfg, std::span<const double> x0,
                                 Exec exec) {
    cfg.validate();
    const auto grid = cfg.resolved_grid();
    const int d = static_cast<int>(x0.size());
    ForecastEnsemble ens;
    ens.dim = d;
    ens.members = cfg.ensemble;
    ens.samples.resize(static_cast<std::size_t>(cfg.ensemble) * d);
    ens.x0.assign(x0.begin(), x0.end());
    parallel_for(cfg.ensemble, exec, [&](std::int64_t m) {
        sample_path(drift, diffusion, grid, x0, rng::stream_key(cfg.seed, m),
                    std::span<double>(ens.samples).subspan(m * d, d));
    });
    return ens;
}

std::vector<double> rollout(const DriftField& drift, const DiffusionSchedule& diffusion,
                            const SamplerConfig& cfg, std::span<const double> x0,
                            int n_lags) {
    cfg.validate();
    if (n_lags < 1) throw std::invalid_argument("rollout: n_lags must be >= 1");
    const auto grid = cfg.resolved_grid();
    const int d = static_cast<int>(x0.size());
    std::vector<double> states(static_cast<std::size_t>(n_lags) * d);
    std::vector<double> cur(x0.begin(), x0.end());
    for (int j = 0; j < n_lags; ++j) {
        auto next = std::span<double>(states).subspan(static_cast<std::size_t>(j) * d, d);
        sample_path(drift, diffusion, grid, cur, rng::stream_key(cfg.seed, 0, j), next);
        cur.assign(next.begin(), next.end());
    }
    return states;
}

std::vector<ForecastEnsemble> rollout_ensemble(const DriftField& drift,
                                               const DiffusionSchedule& diffusion,
                                               const SamplerConfig& cfg,
                                               std::span<const double> x0, int n_lags,
                                               Exec exec) {
    cfg.validate();
    if (n_lags < 1) throw std::invalid_argument("rollout_ensemble: n_lags must be >= 1");
    const auto grid = cfg.resolved_grid();
    const int d = static_cast<int>(x0.size());
    std::vector<ForecastEnsemble> lags(n_lags);
    for (auto& e : lags) {
        e.dim = d;
        e.members = cfg.ensemble;
        e.samples.resize(static_cast<std::size_t>(cfg.ensemble) * d);
        e.x0.assign(x0.begin(), x0.end());
    }
    parallel_for(cfg.ensemble, exec, [&](std::int64_t m) {
        std::vector<double> cur(x0.begin(), x0.end());
        for (int j = 0; j < n_lags; ++j) {
            auto next = std::span<double>(lags[j].samples).subspan(m * d, d);
            sample_path(drift, diffusion, grid, cur, rng::stream_key(cfg.seed, m, j), next);
            cur.assign(next.begin(), next.end());
        }
    });
    return lags;
}

PathKlEstimate path_kl(const DriftField& b_true, const DriftField& b_hat,
                       const DiffusionSchedule& diffusion, const GmmSpec& spec,
                       std::span<const double> x0, std::int64_t n_mc,
                       std::span<const double> s_grid, std::uint64_t seed, Exec exec) {
    if (s_grid.size() < 2) throw std::invalid_argument("path_kl: need >= 2 grid nodes");
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
        if (!(s_grid[i] > 0.0 && s_grid[i] < 1.0))
            throw std::invalid_argument("path_kl: grid must lie strictly inside (0,1)");
        if (i > 0 && !(s_grid[i] > s_grid[i - 1]))
            throw std::invalid_argument("path_kl: grid must be strictly increasing");
    }
    if (n_mc < 2) throw std::invalid_argument("path_kl: need n_mc >= 2");
    const Schedule& sched = diffusion.reference();
    const int d = spec.dim;
    const std::size_t n_nodes = s_grid.size();

    PathKlEstimate est;
    est.s_nodes.assign(s_grid.begin(), s_grid.end());
    est.weights.resize(n_nodes);
    std::vector<double> node_mean(n_nodes), node_var(n_nodes);

    for (std::size_t q = 0; q < n_nodes; ++q) {
        const double s = s_grid[q];
        const ScheduleValues v = sched.at(s);
        const double g = diffusion.at(s);
        if (g == 0.0)
            throw NumericError("path_kl: diffusion vanishes at interior node s=" +
                               std::to_string(s));
        const double bracket =
            1.0 + 0.5 * v.beta * score_gain(sched, s) * (g * g - v.sigma * v.sigma);
        est.weights[q] = bracket * bracket / (2.0 * g * g);

        const GmmSampler sampler(gmm_marginal(spec, sched, s, x0));
        std::vector<double> terms(static_cast<std::size_t>(n_mc));
        parallel_for(n_mc, exec, [&](std::int64_t k) {
            rng::Stream stream = rng::Stream::keyed(seed, q, k);
            std::vector<double> x(d), bt(d), bh(d);
            sampler.sample(stream, x);
            b_true.eval(s, x, x0, bt);
            b_hat.eval(s, x, x0, bh);
            double e = 0.0;
            for (int i = 0; i < d; ++i) {
                const double r = bh[i] - bt[i];
                e += r * r;
            }
            terms[static_cast<std::size_t>(k)] = e;
        });
        const double mean = pairwise_sum(terms) / static_cast<double>(n_mc);
        double ss = 0.0;
        for (double t : terms) ss += (t - mean) * (t - mean);
        node_mean[q] = mean;
        node_var[q] = ss / (static_cast<double>(n_mc) - 1.0);
    }

    double value = 0.0;
    double var = 0.0;
    std::vector<double> quad_coeff(n_nodes, 0.0);
    for (std::size_t q = 0; q + 1 < n_nodes; ++q) {
        const double h = s_grid[q + 1] - s_grid[q];
        quad_coeff[q] += 0.5 * h;
        quad_coeff[q + 1] += 0.5 * h;
    }
    for (std::size_t q = 0; q < n_nodes; ++q) {
        const double c = quad_coeff[q] * est.weights[q];
        value += c * node_mean[q];
        var += c * c * node_var[q] / static_cast<double>(n_mc);
    }
    est.value = value;
    est.std_error = std::sqrt(var);
    return est;
}

MomentTrace reference_process_check(const Schedule& sched, const SamplerConfig& cfg,
                                    std::span<const double> x0, std::int64_t members,
                                    Exec exec) {
    cfg.validate();
    if (members < 2) throw std::invalid_argument("reference_process_check: members >= 2");
    const auto grid = cfg.resolved_grid();
    const int d = static_cast<int>(x0.size());
    const std::size_t n_nodes = grid.size();

    // Bucketed accumulation keyed by member index modulo kReduceBuckets keeps
    // the reduction order fixed for any thread count.
    const int B = kReduceBuckets;
    std::vector<double> bucket_sum(static_cast<std::size_t>(B) * n_nodes * d, 0.0);
    std::vector<double> bucket_sumsq(static_cast<std::size_t>(B) * n_nodes * d, 0.0);

    parallel_for(B, exec, [&](std::int64_t bucket) {
        std::vector<double> state(d);
        double* sums = bucket_sum.data() + bucket * n_nodes * d;
        double* sumsqs = bucket_sumsq.data() + bucket * n_nodes * d;
        for (std::int64_t m = bucket; m < members; m += B) {
            const std::uint64_t key = rng::stream_key(cfg.seed, m);
            state.assign(x0.begin(), x0.end());
            for (int i = 0; i < d; ++i) {
                sums[i] += state[i];
                sumsqs[i] += state[i] * state[i];
            }
            // first step: drift of the standard-normal endpoint target at s=0,
            // b_0 = dalpha*x0 (its mean is zero), noise amplitude sigma_0.
            {
                const ScheduleValues v0 = sched.at(grid[0]);
                const double ds = grid[1] - grid[0];
                const double root_ds = std::sqrt(ds);
                for (int i = 0; i < d; ++i)
                    state[i] += v0.dalpha * x0[i] * ds +
                                v0.sigma * root_ds * rng::normal_at(key, i);
                for (int i = 0; i < d; ++i) {
                    sums[d + i] += state[i];
                    sumsqs[d + i] += state[i] * state[i];
                }
            }
            for (std::size_t n = 1; n + 1 < n_nodes; ++n) {
                const double s = grid[n];
                const double ds = grid[n + 1] - grid[n];
                const ScheduleValues v = sched.at(s);
                const double a = reference_rate(sched, s);
                const double g = follmer_diffusion(sched, s);
                const double root_ds = std::sqrt(ds);
                for (int i = 0; i < d; ++i) {
                    state[i] += (a * (state[i] - v.alpha * x0[i]) + v.dalpha * x0[i]) * ds +
                                g * root_ds * rng::normal_at(key, n * d + i);
                }
                double* srow = sums + (n + 1) * d;
                double* qrow = sumsqs + (n + 1) * d;
                for (int i = 0; i < d; ++i) {
                    srow[i] += state[i];
                    qrow[i] += state[i] * state[i];
                }
            }
        }
    });

    MomentTrace trace;
    trace.s = grid;
    trace.mean.assign(n_nodes * d, 0.0);
    trace.variance.assign(n_nodes * d, 0.0);
    const double inv_m = 1.0 / static_cast<double>(members);
    for (std::size_t j = 0; j < n_nodes * d; ++j) {
        double s1 = 0.0, s2 = 0.0;
        for (int bucket = 0; bucket < B; ++bucket) {
            s1 += bucket_sum[bucket * n_nodes * d + j];
            s2 += bucket_sumsq[bucket * n_nodes * d + j];
        }
        const double mean = s1 * inv_m;
        trace.mean[j] = mean;
        trace.variance[j] =
            (s2 - static_cast<double>(members) * mean * mean) / (members - 1.0);
    }
    return trace;
}

}  // namespace sif
