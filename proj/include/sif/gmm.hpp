#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sif/drift.hpp"
#include "sif/rng.hpp"
#include "sif/schedule.hpp"

namespace sif {

// Gaussian mixture describing a conditional target density. Storage is flat
// row-major: means is J x d, covariances is J x d x d.
struct GmmSpec {
    int dim = 0;
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> covariances;

    int components() const noexcept { return static_cast<int>(weights.size()); }
    std::span<const double> mean(int j) const { return {means.data() + j * dim, (std::size_t)dim}; }
    std::span<const double> covariance(int j) const {
        return {covariances.data() + j * dim * dim, (std::size_t)(dim * dim)};
    }

    // Simplex weights (1e-12), symmetric (1e-12) positive-definite covariances.
    void validate() const;

    std::string to_json_text() const;
    static GmmSpec from_json_text(const std::string& text);

    // The 5-mode invariant density of the planar jump process: base mode
    // N([5,0], diag(1.5, 0.1)) rotated counterclockwise by 2*pi/5 four times,
    // equal weights.
    static GmmSpec five_mode_ring();
};

// Time-s conditional marginal: component means alpha*x0 + beta*m_j and
// covariances beta^2 C_j + s sigma^2 I, weights unchanged.
struct GmmMarginal {
    int dim = 0;
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> covariances;
};

GmmMarginal gmm_marginal(const GmmSpec& spec, const Schedule& sched, double s,
                         std::span<const double> x0);

// Closed-form drift b_s(x, x0) for the mixture target. Valid on all of [0,1];
// interior values use log-sum-exp responsibilities, s=0 and s=1 use the
// analytic boundary expressions. Throws NumericError if every responsibility
// underflows.
void gmm_drift(const GmmSpec& spec, const Schedule& sched, double s,
               std::span<const double> x, std::span<const double> x0,
               std::span<double> out);

// Closed-form score grad log rho_s(x|x0) = -sum_j w_j(x) Cbar_j^{-1}(x - mbar_j).
// Defined for s in (0,1]; throws std::domain_error at s=0.
void gmm_score(const GmmSpec& spec, const Schedule& sched, double s,
               std::span<const double> x, std::span<const double> x0,
               std::span<double> out);

// Posterior component responsibilities at (s, x); sums to 1.
void gmm_responsibilities(const GmmSpec& spec, const Schedule& sched, double s,
                          std::span<const double> x, std::span<const double> x0,
                          std::span<double> out);

// Gradient of log density of the plain mixture itself (no schedule); equals
// gmm_score at s=1 and drives the Langevin part of the jump process.
void gmm_log_density_grad(const GmmSpec& spec, std::span<const double> x,
                          std::span<double> out);

double gmm_log_density(const GmmSpec& spec, std::span<const double> x);

// Draws from a mixture with precomputed Cholesky factors. One categorical
// uniform plus dim normals are consumed per sample, in that order.
class GmmSampler {
public:
    explicit GmmSampler(const GmmMarginal& marginal);
    explicit GmmSampler(const GmmSpec& spec);

    int dim() const noexcept { return dim_; }
    void sample(rng::Stream& stream, std::span<double> out) const;

private:
    void init(int dim, std::span<const double> weights, std::span<const double> means,
              std::span<const double> covariances);
    int dim_ = 0;
    std::vector<double> cum_weights_;
    std::vector<double> means_;
    std::vector<double> factors_;  // J x d x d lower Cholesky (zero for zero cov)
};

// DriftField view of the closed-form mixture drift. The mixture parameters may
// depend on the conditioning state through an optional caller-supplied map.
class AnalyticGmmDrift final : public DriftField {
public:
    using ConditionalSpec = std::function<GmmSpec(std::span<const double> x0)>;

    AnalyticGmmDrift(GmmSpec spec, Schedule sched);
    AnalyticGmmDrift(ConditionalSpec spec_fn, int dim, Schedule sched);

    int dim() const noexcept override { return dim_; }
    void eval(double s, std::span<const double> x, std::span<const double> x0,
              std::span<double> out) const override;

    const Schedule& schedule() const noexcept { return sched_; }

private:
    GmmSpec fixed_;
    ConditionalSpec conditional_;
    int dim_;
    Schedule sched_;
};

}  // namespace sif
