#include "sif/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "sif/errors.hpp"
#include "sif/linalg.hpp"

namespace sif {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Shared mixture-at-time-s work: responsibilities w_j and solves
// u_j = Cbar_j^{-1}(x - mbar_j) for each component.
struct MixtureWork {
    std::vector<double> log_w;      // J, normalized responsibilities in log space
    std::vector<double> u;          // J x d
    std::vector<double> mbar;       // J x d
};

MixtureWork mixture_work(int J, int d, std::span<const double> weights,
                         std::span<const double> mbar, std::span<const double> cbar,
                         std::span<const double> x, double s_report) {
    MixtureWork w;
    w.mbar.assign(mbar.begin(), mbar.end());
    w.log_w.resize(J);
    w.u.resize(static_cast<std::size_t>(J) * d);
    std::vector<double> chol(static_cast<std::size_t>(d) * d);
    std::vector<double> diff(d);
    for (int j = 0; j < J; ++j) {
        std::copy_n(cbar.data() + static_cast<std::size_t>(j) * d * d, d * d, chol.begin());
        if (!linalg::cholesky(d, chol))
            throw NumericError("gmm: covariance not positive-definite at s=" +
                               std::to_string(s_report));
        for (int i = 0; i < d; ++i) diff[i] = x[i] - mbar[j * d + i];
        auto uj = std::span<double>(w.u).subspan(static_cast<std::size_t>(j) * d, d);
        linalg::cholesky_solve(d, chol, diff, uj);
        const double quad = linalg::dot(diff, uj);
        const double logdet = linalg::cholesky_logdet(d, chol);
        w.log_w[j] = std::log(weights[j]) - 0.5 * (quad + logdet + d * kLog2Pi);
    }
    const double m = *std::max_element(w.log_w.begin(), w.log_w.end());
    if (!std::isfinite(m))
        throw NumericError("gmm: all responsibilities underflow at s=" +
                           std::to_string(s_report));
    double z = 0.0;
    for (double& lw : w.log_w) z += std::exp(lw - m);
    const double log_z = m + std::log(z);
    for (double& lw : w.log_w) lw -= log_z;
    return w;
}

}  // namespace

void GmmSpec::validate() const {
    const int J = components();
    if (dim < 1 || J < 1) throw std::invalid_argument("GmmSpec: empty spec");
    if (static_cast<int>(means.size()) != J * dim ||
        static_cast<int>(covariances.size()) != J * dim * dim)
        throw std::invalid_argument("GmmSpec: inconsistent array sizes");
    double total = 0.0;
    for (double p : weights) {
        if (p < 0.0) throw std::invalid_argument("GmmSpec: negative weight");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("GmmSpec: weights do not sum to 1");
    std::vector<double> chol(static_cast<std::size_t>(dim) * dim);
    for (int j = 0; j < J; ++j) {
        const auto c = covariance(j);
        for (int a = 0; a < dim; ++a)
            for (int b = a + 1; b < dim; ++b)
                if (std::abs(c[a * dim + b] - c[b * dim + a]) > 1e-12)
                    throw std::invalid_argument("GmmSpec: covariance not symmetric");
        std::copy(c.begin(), c.end(), chol.begin());
        if (!linalg::cholesky(dim, chol))
            throw std::invalid_argument("GmmSpec: covariance not positive-definite");
    }
}

std::string GmmSpec::to_json_text() const {
    nlohmann::json j;
    j["dim"] = dim;
    j["weights"] = weights;
    j["means"] = means;             // row-major J x d
    j["covariances"] = covariances;  // row-major J x d x d
    return j.dump(2);
}

GmmSpec GmmSpec::from_json_text(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    GmmSpec spec;
    spec.dim = j.at("dim").get<int>();
    spec.weights = j.at("weights").get<std::vector<double>>();
    spec.means = j.at("means").get<std::vector<double>>();
    spec.covariances = j.at("covariances").get<std::vector<double>>();
    spec.validate();
    return spec;
}

GmmSpec GmmSpec::five_mode_ring() {
    GmmSpec spec;
    spec.dim = 2;
    const double base_mean[2] = {5.0, 0.0};
    const double base_cov[4] = {1.5, 0.0, 0.0, 0.1};
    for (int j = 0; j < 5; ++j) {
        const double th = 2.0 * std::numbers::pi * j / 5.0;
        const double c = std::cos(th), s = std::sin(th);
        spec.weights.push_back(0.2);
        spec.means.push_back(c * base_mean[0] - s * base_mean[1]);
        spec.means.push_back(s * base_mean[0] + c * base_mean[1]);
        // R C R^T for R = [[c,-s],[s,c]]
        const double a = base_cov[0], b = base_cov[3];
        spec.covariances.push_back(c * c * a + s * s * b);
        spec.covariances.push_back(c * s * (a - b));
        spec.covariances.push_back(c * s * (a - b));
        spec.covariances.push_back(s * s * a + c * c * b);
    }
    return spec;
}

GmmMarginal gmm_marginal(const GmmSpec& spec, const Schedule& sched, double s,
                         std::span<const double> x0) {
    if (static_cast<int>(x0.size()) != spec.dim)
        throw std::invalid_argument("gmm_marginal: x0 dimension mismatch");
    const ScheduleValues v = sched.at(s);
    const int J = spec.components();
    const int d = spec.dim;
    GmmMarginal m;
    m.dim = d;
    m.weights = spec.weights;
    m.means.resize(static_cast<std::size_t>(J) * d);
    m.covariances.resize(static_cast<std::size_t>(J) * d * d);
    const double svar = s * v.sigma * v.sigma;
    for (int j = 0; j < J; ++j) {
        for (int i = 0; i < d; ++i)
            m.means[j * d + i] = v.alpha * x0[i] + v.beta * spec.means[j * d + i];
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                m.covariances[(j * d + a) * d + b] =
                    v.beta * v.beta * spec.covariances[(j * d + a) * d + b] +
                    (a == b ? svar : 0.0);
    }
    return m;
}

void gmm_drift(const GmmSpec& spec, const Schedule& sched, double s,
               std::span<const double> x, std::span<const double> x0,
               std::span<double> out) {
    const int d = spec.dim;
    const int J = spec.components();
    if (static_cast<int>(x.size()) != d || static_cast<int>(x0.size()) != d ||
        static_cast<int>(out.size()) != d)
        throw std::invalid_argument("gmm_drift: dimension mismatch");
    const ScheduleValues v = sched.at(s);
    if (s == 0.0) {
        // point-mass marginal: b_0 = dalpha*x0 + dbeta*E[x1]
        for (int i = 0; i < d; ++i) {
            double mean1 = 0.0;
            for (int j = 0; j < J; ++j) mean1 += spec.weights[j] * spec.means[j * d + i];
            out[i] = v.dalpha * x0[i] + v.dbeta * mean1;
        }
        return;
    }
    const GmmMarginal marg = gmm_marginal(spec, sched, s, x0);
    const MixtureWork w = mixture_work(J, d, spec.weights, marg.means, marg.covariances, x, s);
    const double bb = v.beta * v.dbeta;
    const double ss = s * v.sigma * v.dsigma;
    for (int i = 0; i < d; ++i) out[i] = v.dalpha * x0[i];
    std::vector<double> cu(d);
    for (int j = 0; j < J; ++j) {
        const double wj = std::exp(w.log_w[j]);
        const auto uj = std::span<const double>(w.u).subspan(static_cast<std::size_t>(j) * d, d);
        linalg::matvec(d, d, spec.covariance(j), uj, cu);
        for (int i = 0; i < d; ++i)
            out[i] += wj * (v.dbeta * spec.means[j * d + i] + bb * cu[i] + ss * uj[i]);
    }
}

void gmm_score(const GmmSpec& spec, const Schedule& sched, double s,
               std::span<const double> x, std::span<const double> x0,
               std::span<double> out) {
    const int d = spec.dim;
    const int J = spec.components();
    if (static_cast<int>(x.size()) != d || static_cast<int>(x0.size()) != d ||
        static_cast<int>(out.size()) != d)
        throw std::invalid_argument("gmm_score: dimension mismatch");
    if (!(s > 0.0 && s <= 1.0))
        throw std::domain_error("gmm_score: s must lie in (0,1]");
    const GmmMarginal marg = gmm_marginal(spec, sched, s, x0);
    const MixtureWork w = mixture_work(J, d, spec.weights, marg.means, marg.covariances, x, s);
    std::fill(out.begin(), out.end(), 0.0);
    for (int j = 0; j < J; ++j) {
        const double wj = std::exp(w.log_w[j]);
        for (int i = 0; i < d; ++i) out[i] -= wj * w.u[j * d + i];
    }
}

void gmm_responsibilities(const GmmSpec& spec, const Schedule& sched, double s,
                          std::span<const double> x, std::span<const double> x0,
                          std::span<double> out) {
    const int J = spec.components();
    if (static_cast<int>(out.size()) != J)
        throw std::invalid_argument("gmm_responsibilities: output size mismatch");
    const GmmMarginal marg = gmm_marginal(spec, sched, s, x0);
    const MixtureWork w =
        mixture_work(J, spec.dim, spec.weights, marg.means, marg.covariances, x, s);
    for (int j = 0; j < J; ++j) out[j] = std::exp(w.log_w[j]);
}

double gmm_log_density(const GmmSpec& spec, std::span<const double> x) {
    const int d = spec.dim;
    const int J = spec.components();
    if (static_cast<int>(x.size()) != d)
        throw std::invalid_argument("gmm_log_density: dimension mismatch");
    std::vector<double> chol(static_cast<std::size_t>(d) * d), diff(d), u(d);
    std::vector<double> logs(J);
    for (int j = 0; j < J; ++j) {
        std::copy_n(spec.covariances.data() + static_cast<std::size_t>(j) * d * d, d * d,
                    chol.begin());
        if (!linalg::cholesky(d, chol))
            throw NumericError("gmm_log_density: covariance not positive-definite");
        for (int i = 0; i < d; ++i) diff[i] = x[i] - spec.means[j * d + i];
        linalg::cholesky_solve(d, chol, diff, u);
        logs[j] = std::log(spec.weights[j]) -
                  0.5 * (linalg::dot(diff, u) + linalg::cholesky_logdet(d, chol) +
                         d * kLog2Pi);
    }
    const double m = *std::max_element(logs.begin(), logs.end());
    double z = 0.0;
    for (double lw : logs) z += std::exp(lw - m);
    return m + std::log(z);
}

void gmm_log_density_grad(const GmmSpec& spec, std::span<const double> x,
                          std::span<double> out) {
    const int d = spec.dim;
    const int J = spec.components();
    if (static_cast<int>(x.size()) != d || static_cast<int>(out.size()) != d)
        throw std::invalid_argument("gmm_log_density_grad: dimension mismatch");
    const MixtureWork w = mixture_work(J, d, spec.weights, spec.means, spec.covariances, x, 1.0);
    std::fill(out.begin(), out.end(), 0.0);
    for (int j = 0; j < J; ++j) {
        const double wj = std::exp(w.log_w[j]);
        for (int i = 0; i < d; ++i) out[i] -= wj * w.u[j * d + i];
    }
}

GmmSampler::GmmSampler(const GmmMarginal& marginal) {
    init(marginal.dim, marginal.weights, marginal.means, marginal.covariances);
}

GmmSampler::GmmSampler(const GmmSpec& spec) {
    init(spec.dim, spec.weights, spec.means, spec.covariances);
}

void GmmSampler::init(int dim, std::span<const double> weights,
                      std::span<const double> means, std::span<const double> covariances) {
    dim_ = dim;
    const int J = static_cast<int>(weights.size());
    cum_weights_.resize(J);
    double acc = 0.0;
    for (int j = 0; j < J; ++j) {
        acc += weights[j];
        cum_weights_[j] = acc;
    }
    cum_weights_.back() = 1.0;
    means_.assign(means.begin(), means.end());
    factors_.assign(covariances.begin(), covariances.end());
    for (int j = 0; j < J; ++j) {
        auto block = std::span<double>(factors_).subspan(
            static_cast<std::size_t>(j) * dim * dim, static_cast<std::size_t>(dim) * dim);
        double maxabs = 0.0;
        for (double c : block) maxabs = std::max(maxabs, std::abs(c));
        if (maxabs == 0.0) continue;  // point mass component (s=0 marginal)
        if (!linalg::cholesky(dim, block))
            throw std::invalid_argument("GmmSampler: covariance not positive-definite");
    }
}

void GmmSampler::sample(rng::Stream& stream, std::span<double> out) const {
    const double u = stream.uniform();
    int j = 0;
    while (j + 1 < static_cast<int>(cum_weights_.size()) && u > cum_weights_[j]) ++j;
    std::vector<double> z(dim_);
    stream.normal_fill(z);
    const auto l = std::span<const double>(factors_).subspan(
        static_cast<std::size_t>(j) * dim_ * dim_, static_cast<std::size_t>(dim_) * dim_);
    linalg::lower_matvec(dim_, l, z, out);
    for (int i = 0; i < dim_; ++i) out[i] += means_[j * dim_ + i];
}

AnalyticGmmDrift::AnalyticGmmDrift(GmmSpec spec, Schedule sched)
    : fixed_(std::move(spec)), dim_(fixed_.dim), sched_(std::move(sched)) {
    fixed_.validate();
}

AnalyticGmmDrift::AnalyticGmmDrift(ConditionalSpec spec_fn, int dim, Schedule sched)
    : conditional_(std::move(spec_fn)), dim_(dim), sched_(std::move(sched)) {}

void AnalyticGmmDrift::eval(double s, std::span<const double> x,
                            std::span<const double> x0, std::span<double> out) const {
    if (conditional_) {
        const GmmSpec spec = conditional_(x0);
        gmm_drift(spec, sched_, s, x, x0, out);
    } else {
        gmm_drift(fixed_, sched_, s, x, x0, out);
    }
}

}  // namespace sif
