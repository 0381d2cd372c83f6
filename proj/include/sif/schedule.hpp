#pragma once

#include <span>
#include <vector>

namespace sif {

// Interpolant coefficient triple (alpha_s, beta_s, sigma_s) with derivatives.
// Contracts, enforced by Schedule::validate():
//   alpha(0)=1, alpha(1)=0, beta(0)=0, beta(1)=1, sigma(1)=0 (machine precision)
//   dbeta > 0 on (0,1], dsigma < 0 on [0,1], alpha^2+beta^2+sigma^2 > 0.
struct ScheduleValues {
    double alpha;
    double beta;
    double sigma;
    double dalpha;
    double dbeta;
    double dsigma;
};

enum class ScheduleKind { linear_beta, quadratic_beta, custom_tabulated };

// Tabulated (value, derivative) nodes for a custom schedule; interpolated with
// cubic Hermite polynomials so the returned derivative is exactly the
// derivative of the returned value curve.
struct TabulatedCurves {
    std::vector<double> s;               // strictly increasing, s.front()=0, s.back()=1
    std::vector<ScheduleValues> values;  // one entry per node
};

class Schedule {
public:
    // alpha = 1-s, beta = s, sigma = epsilon*(1-s)
    static Schedule linear_beta(double epsilon = 1.0);
    // alpha = 1-s, beta = s^2, sigma = epsilon*(1-s)
    static Schedule quadratic_beta(double epsilon = 1.0);
    // Validates all invariants at load time; throws std::invalid_argument.
    static Schedule tabulated(TabulatedCurves curves);

    ScheduleKind kind() const noexcept { return kind_; }
    double epsilon() const noexcept { return epsilon_; }

    // Coefficients and derivatives at s; throws std::domain_error outside [0,1].
    ScheduleValues at(double s) const;

    // lim_{s->0} s*dbeta/beta: 1 when dbeta(0)>0, 2 when dbeta(0)=0 (beta ~ s^2).
    double beta_rate_limit0() const noexcept;

    // Boundary + sign checks on a dense grid; throws std::invalid_argument.
    void validate() const;

private:
    Schedule(ScheduleKind kind, double epsilon) : kind_(kind), epsilon_(epsilon) {}
    ScheduleKind kind_;
    double epsilon_;
    TabulatedCurves curves_;  // custom_tabulated only
};

// Score prefactor A_s = [s sigma (dbeta sigma - beta dsigma)]^{-1}, finite and
// positive on (0,1). Throws std::domain_error at s in {0,1}.
double score_gain(const Schedule& sched, double s);

// Affine score anchor c_s(x,x0) = dbeta*x + (beta*dalpha - dbeta*alpha)*x0.
void score_shift(const Schedule& sched, double s, std::span<const double> x,
                 std::span<const double> x0, std::span<double> out);

// grad log rho_s(x|x0) = A_s [beta*b - c_s(x,x0)] given the drift value b.
// Throws std::domain_error at s in {0,1}.
void score_from_drift(const Schedule& sched, std::span<const double> b, double s,
                      std::span<const double> x, std::span<const double> x0,
                      std::span<double> out);

// Optimal (path-KL minimizing) diffusion g_s; defined on all of [0,1], with the
// s=0 value taken as the analytic limit when beta vanishes there.
double follmer_diffusion(const Schedule& sched, double s);

// Mean-reversion rate a_s = d/ds log[(beta^2 + s sigma^2)/beta] of the Gaussian
// reference process. Throws std::domain_error at s in {0,1}.
double reference_rate(const Schedule& sched, double s);

enum class DiffusionKind { match_sigma, follmer, custom_tabulated };

// Diffusion coefficient g_s bound to its reference schedule. Admissibility
// (finite endpoint limits of s^{-1}[g^2 - sigma^2] and g^2/sigma) is probed
// numerically on a geometric grid by validate().
class DiffusionSchedule {
public:
    static DiffusionSchedule match_sigma(Schedule reference);
    static DiffusionSchedule follmer(Schedule reference);
    // Piecewise-linear tabulated g on strictly increasing nodes covering [0,1].
    static DiffusionSchedule tabulated(Schedule reference, std::vector<double> s_nodes,
                                       std::vector<double> g_values);

    DiffusionKind kind() const noexcept { return kind_; }
    const Schedule& reference() const noexcept { return reference_; }

    double at(double s) const;

    void validate() const;

private:
    DiffusionSchedule(DiffusionKind kind, Schedule reference)
        : kind_(kind), reference_(std::move(reference)) {}
    DiffusionKind kind_;
    Schedule reference_;
    std::vector<double> nodes_;
    std::vector<double> g_;
};

// Drift adjustment for a different diffusion coefficient:
//   b^g = b + 1/2 (g^2 - sigma^2) A_s [beta*b - c_s(x,x0)].
// For match_sigma this is the identity on b. s=0 throws std::domain_error
// (samplers use the dedicated first step instead); at s=1 the analytic
// endpoint b^g = b is returned.
void drift_for_diffusion(const DiffusionSchedule& diffusion, std::span<const double> b,
                         double s, std::span<const double> x, std::span<const double> x0,
                         std::span<double> out);

}  // namespace sif
