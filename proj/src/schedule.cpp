#include "sif/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sif {

namespace {

void require_unit_interval(double s, const char* who) {
    if (!(s >= 0.0 && s <= 1.0))
        throw std::domain_error(std::string(who) + ": s=" + std::to_string(s) +
                                " outside [0,1]");
}

void require_interior(double s, const char* who) {
    if (!(s > 0.0 && s < 1.0))
        throw std::domain_error(std::string(who) + ": s=" + std::to_string(s) +
                                " must lie strictly inside (0,1)");
}

// Cubic Hermite segment value/derivative from endpoint (value, derivative) data.
struct HermiteOut {
    double value;
    double deriv;
};

HermiteOut hermite(double s0, double s1, double v0, double v1, double d0, double d1,
                   double s) {
    const double h = s1 - s0;
    const double t = (s - s0) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    const double g00 = (6 * t2 - 6 * t) / h;
    const double g10 = (3 * t2 - 4 * t + 1) / h;
    const double g01 = (-6 * t2 + 6 * t) / h;
    const double g11 = (3 * t2 - 2 * t) / h;
    return {h00 * v0 + h10 * h * d0 + h01 * v1 + h11 * h * d1,
            g00 * v0 + g10 * h * d0 + g01 * v1 + g11 * h * d1};
}

}  // namespace

Schedule Schedule::linear_beta(double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("Schedule: epsilon must be > 0");
    return Schedule(ScheduleKind::linear_beta, epsilon);
}

Schedule Schedule::quadratic_beta(double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("Schedule: epsilon must be > 0");
    return Schedule(ScheduleKind::quadratic_beta, epsilon);
}

Schedule Schedule::tabulated(TabulatedCurves curves) {
    if (curves.s.size() < 2 || curves.s.size() != curves.values.size())
        throw std::invalid_argument("Schedule::tabulated: need >= 2 matching nodes");
    if (curves.s.front() != 0.0 || curves.s.back() != 1.0)
        throw std::invalid_argument("Schedule::tabulated: nodes must span [0,1] exactly");
    for (std::size_t i = 1; i < curves.s.size(); ++i)
        if (!(curves.s[i] > curves.s[i - 1]))
            throw std::invalid_argument("Schedule::tabulated: nodes must be increasing");
    Schedule sched(ScheduleKind::custom_tabulated, 1.0);
    sched.curves_ = std::move(curves);
    sched.validate();
    return sched;
}

ScheduleValues Schedule::at(double s) const {
    require_unit_interval(s, "Schedule::at");
    switch (kind_) {
        case ScheduleKind::linear_beta:
            return {1.0 - s, s, epsilon_ * (1.0 - s), -1.0, 1.0, -epsilon_};
        case ScheduleKind::quadratic_beta:
            return {1.0 - s, s * s, epsilon_ * (1.0 - s), -1.0, 2.0 * s, -epsilon_};
        case ScheduleKind::custom_tabulated: {
            const auto& sv = curves_.s;
            const auto it = std::upper_bound(sv.begin(), sv.end(), s);
            std::size_t hi = static_cast<std::size_t>(it - sv.begin());
            if (hi == sv.size()) hi = sv.size() - 1;
            if (hi == 0) hi = 1;
            const std::size_t lo = hi - 1;
            const auto& a = curves_.values[lo];
            const auto& b = curves_.values[hi];
            const double s0 = sv[lo], s1 = sv[hi];
            const auto ha = hermite(s0, s1, a.alpha, b.alpha, a.dalpha, b.dalpha, s);
            const auto hb = hermite(s0, s1, a.beta, b.beta, a.dbeta, b.dbeta, s);
            const auto hs = hermite(s0, s1, a.sigma, b.sigma, a.dsigma, b.dsigma, s);
            return {ha.value, hb.value, hs.value, ha.deriv, hb.deriv, hs.deriv};
        }
    }
    throw std::logic_error("Schedule::at: bad kind");
}

double Schedule::beta_rate_limit0() const noexcept {
    const ScheduleValues v0 = [this] {
        switch (kind_) {
            case ScheduleKind::linear_beta:
                return ScheduleValues{1, 0, epsilon_, -1, 1, -epsilon_};
            case ScheduleKind::quadratic_beta:
                return ScheduleValues{1, 0, epsilon_, -1, 0, -epsilon_};
            default:
                return curves_.values.front();
        }
    }();
    // beta ~ dbeta(0)*s when dbeta(0)>0, else beta ~ (ddbeta/2)*s^2.
    return v0.dbeta > 0.0 ? 1.0 : 2.0;
}

void Schedule::validate() const {
    const double tol = 1e-14;
    const ScheduleValues v0 = at(0.0);
    const ScheduleValues v1 = at(1.0);
    auto fail = [](const std::string& msg) { throw std::invalid_argument("Schedule: " + msg); };
    if (std::abs(v0.alpha - 1.0) > tol) fail("alpha(0) != 1");
    if (std::abs(v1.alpha) > tol) fail("alpha(1) != 0");
    if (std::abs(v0.beta) > tol) fail("beta(0) != 0");
    if (std::abs(v1.beta - 1.0) > tol) fail("beta(1) != 1");
    if (std::abs(v1.sigma) > tol) fail("sigma(1) != 0");
    const int n = 512;
    for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        const ScheduleValues v = at(s);
        if (s > 0.0 && !(v.dbeta > 0.0)) fail("dbeta <= 0 at s=" + std::to_string(s));
        if (!(v.dsigma < 0.0)) fail("dsigma >= 0 at s=" + std::to_string(s));
        if (!(v.alpha * v.alpha + v.beta * v.beta + v.sigma * v.sigma > 0.0))
            fail("alpha^2+beta^2+sigma^2 vanishes at s=" + std::to_string(s));
    }
}

double score_gain(const Schedule& sched, double s) {
    require_interior(s, "score_gain");
    const ScheduleValues v = sched.at(s);
    const double denom = s * v.sigma * (v.dbeta * v.sigma - v.beta * v.dsigma);
    return 1.0 / denom;
}

void score_shift(const Schedule& sched, double s, std::span<const double> x,
                 std::span<const double> x0, std::span<double> out) {
    require_unit_interval(s, "score_shift");
    if (x.size() != x0.size() || x.size() != out.size())
        throw std::invalid_argument("score_shift: dimension mismatch");
    const ScheduleValues v = sched.at(s);
    const double cx0 = v.beta * v.dalpha - v.dbeta * v.alpha;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = v.dbeta * x[i] + cx0 * x0[i];
}

void score_from_drift(const Schedule& sched, std::span<const double> b, double s,
                      std::span<const double> x, std::span<const double> x0,
                      std::span<double> out) {
    require_interior(s, "score_from_drift");
    if (b.size() != x.size() || x.size() != x0.size() || x.size() != out.size())
        throw std::invalid_argument("score_from_drift: dimension mismatch");
    const ScheduleValues v = sched.at(s);
    const double gain = score_gain(sched, s);
    const double cx0 = v.beta * v.dalpha - v.dbeta * v.alpha;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double shift = v.dbeta * x[i] + cx0 * x0[i];
        out[i] = gain * (v.beta * b[i] - shift);
    }
}

double follmer_diffusion(const Schedule& sched, double s) {
    require_unit_interval(s, "follmer_diffusion");
    const ScheduleValues v = sched.at(s);
    // |g|^2 = 2 sigma^2 (s dbeta/beta) - 2 s sigma dsigma - sigma^2; the ratio
    // s*dbeta/beta is replaced by its analytic limit at s=0 (0/0 form).
    const double u = (s == 0.0) ? sched.beta_rate_limit0() : s * v.dbeta / v.beta;
    const double g2 = 2.0 * v.sigma * v.sigma * u - 2.0 * s * v.sigma * v.dsigma -
                      v.sigma * v.sigma;
    return std::sqrt(std::abs(g2));
}

double reference_rate(const Schedule& sched, double s) {
    require_interior(s, "reference_rate");
    const ScheduleValues v = sched.at(s);
    const double u = s * v.dbeta / v.beta;
    const double num = 2.0 * v.sigma * v.sigma * u - 2.0 * s * v.sigma * v.dsigma -
                       v.sigma * v.sigma;
    return v.dbeta / v.beta - num / (v.beta * v.beta + s * v.sigma * v.sigma);
}

DiffusionSchedule DiffusionSchedule::match_sigma(Schedule reference) {
    return DiffusionSchedule(DiffusionKind::match_sigma, std::move(reference));
}

DiffusionSchedule DiffusionSchedule::follmer(Schedule reference) {
    return DiffusionSchedule(DiffusionKind::follmer, std::move(reference));
}

DiffusionSchedule DiffusionSchedule::tabulated(Schedule reference,
                                               std::vector<double> s_nodes,
                                               std::vector<double> g_values) {
    if (s_nodes.size() < 2 || s_nodes.size() != g_values.size())
        throw std::invalid_argument("DiffusionSchedule::tabulated: need >= 2 matching nodes");
    if (s_nodes.front() != 0.0 || s_nodes.back() != 1.0)
        throw std::invalid_argument("DiffusionSchedule::tabulated: nodes must span [0,1]");
    for (std::size_t i = 1; i < s_nodes.size(); ++i)
        if (!(s_nodes[i] > s_nodes[i - 1]))
            throw std::invalid_argument("DiffusionSchedule::tabulated: nodes must increase");
    DiffusionSchedule d(DiffusionKind::custom_tabulated, std::move(reference));
    d.nodes_ = std::move(s_nodes);
    d.g_ = std::move(g_values);
    d.validate();
    return d;
}

double DiffusionSchedule::at(double s) const {
    require_unit_interval(s, "DiffusionSchedule::at");
    switch (kind_) {
        case DiffusionKind::match_sigma:
            return reference_.at(s).sigma;
        case DiffusionKind::follmer:
            return follmer_diffusion(reference_, s);
        case DiffusionKind::custom_tabulated: {
            const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), s);
            std::size_t hi = static_cast<std::size_t>(it - nodes_.begin());
            if (hi == nodes_.size()) hi = nodes_.size() - 1;
            if (hi == 0) hi = 1;
            const std::size_t lo = hi - 1;
            const double t = (s - nodes_[lo]) / (nodes_[hi] - nodes_[lo]);
            return (1.0 - t) * g_[lo] + t * g_[hi];
        }
    }
    throw std::logic_error("DiffusionSchedule::at: bad kind");
}

void DiffusionSchedule::validate() const {
    auto fail = [](const std::string& msg) {
        throw std::invalid_argument("DiffusionSchedule: " + msg);
    };
    // s -> 1^-: g^2 / sigma must stay finite.
    {
        double prev = 0.0;
        for (int k = 2; k <= 7; ++k) {
            const double s = 1.0 - std::pow(10.0, -k);
            const double g = at(s);
            const double sigma = reference_.at(s).sigma;
            const double q = g * g / sigma;
            if (!std::isfinite(q) || std::abs(q) > 1e9)
                fail("limit of g^2/sigma at s->1 diverges");
            if (k == 7 && std::abs(q - prev) > 0.01 * (1.0 + std::abs(q)))
                fail("limit of g^2/sigma at s->1 does not settle");
            prev = q;
        }
    }
    // s -> 0^+: s^{-1}[g^2 - sigma^2] must stay finite. The Follmer choice on a
    // schedule with dbeta(0)=0 has no such limit (g_0 != sigma_0); that pair is
    // still integrable through the s=0 singularity, and the sampler's dedicated
    // first step never needs the limit, so it is exempted here.
    const bool follmer_flat_beta =
        kind_ == DiffusionKind::follmer && reference_.beta_rate_limit0() > 1.5;
    if (!follmer_flat_beta) {
        double prev = 0.0;
        for (int k = 2; k <= 7; ++k) {
            const double s = std::pow(10.0, -k);
            const double g = at(s);
            const double sigma = reference_.at(s).sigma;
            const double q = (g * g - sigma * sigma) / s;
            if (!std::isfinite(q) || std::abs(q) > 1e9)
                fail("limit of (g^2-sigma^2)/s at s->0 diverges");
            if (k == 7 && std::abs(q - prev) > 0.01 * (1.0 + std::abs(q)))
                fail("limit of (g^2-sigma^2)/s at s->0 does not settle");
            prev = q;
        }
    }
}

void drift_for_diffusion(const DiffusionSchedule& diffusion, std::span<const double> b,
                         double s, std::span<const double> x, std::span<const double> x0,
                         std::span<double> out) {
    if (b.size() != x.size() || x.size() != x0.size() || x.size() != out.size())
        throw std::invalid_argument("drift_for_diffusion: dimension mismatch");
    if (diffusion.kind() == DiffusionKind::match_sigma) {
        std::copy(b.begin(), b.end(), out.begin());
        return;
    }
    if (s == 0.0)
        throw std::domain_error("drift_for_diffusion: s=0 (use the sampler first step)");
    if (s == 1.0) {  // analytic endpoint: the score correction vanishes with sigma
        std::copy(b.begin(), b.end(), out.begin());
        return;
    }
    const Schedule& sched = diffusion.reference();
    const ScheduleValues v = sched.at(s);
    const double g = diffusion.at(s);
    const double half_diff = 0.5 * (g * g - v.sigma * v.sigma);
    const double gain = score_gain(sched, s);
    const double cx0 = v.beta * v.dalpha - v.dbeta * v.alpha;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double shift = v.dbeta * x[i] + cx0 * x0[i];
        out[i] = b[i] + half_diff * gain * (v.beta * b[i] - shift);
    }
}

}  // namespace sif
