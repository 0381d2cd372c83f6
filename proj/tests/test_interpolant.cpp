#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "sif/gmm.hpp"
#include "sif/interpolant.hpp"
#include "sif/rng.hpp"
#include "sif/stats.hpp"

using namespace sif;

TEST_CASE("draw reproduces the endpoints exactly") {
    rng::Stream stream(7);
    for (const Schedule& sched :
         {Schedule::linear_beta(1.0), Schedule::quadratic_beta(2.0)}) {
        for (int trial = 0; trial < 20; ++trial) {
            SamplePair pair;
            const int d = 1 + static_cast<int>(stream.index_below(3));
            pair.x0.resize(d);
            pair.x1.resize(d);
            std::vector<double> z(d);
            for (int i = 0; i < d; ++i) {
                pair.x0[i] = stream.normal();
                pair.x1[i] = stream.normal();
                z[i] = stream.normal();
            }
            const auto at0 = interpolate(sched, pair, 0.0, z);
            const auto at1 = interpolate(sched, pair, 1.0, z);
            for (int i = 0; i < d; ++i) {
                CHECK(at0.point[i] == doctest::Approx(pair.x0[i]).epsilon(1e-14));
                CHECK(at1.point[i] == doctest::Approx(pair.x1[i]).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("draw matches the plug-in worked example") {
    const Schedule sched = Schedule::quadratic_beta(1.0);
    SamplePair pair{{1.0}, {3.0}};
    const double z[1] = {2.0};
    const auto draw = interpolate(sched, pair, 0.25, z);
    CHECK(draw.point[0] == doctest::Approx(1.6875));
    CHECK(draw.target[0] == doctest::Approx(-0.5));
}

TEST_CASE("loss vanishes for the per-draw target oracle") {
    const Schedule sched = Schedule::linear_beta(1.0);
    rng::Stream stream(21);
    const int n = 64, d = 2;
    std::vector<double> x0(n * d), x1(n * d), s(n), z(n * d);
    for (auto& v : x0) v = stream.normal();
    for (auto& v : x1) v = stream.normal();
    for (auto& v : z) v = stream.normal();
    for (auto& v : s) v = stream.uniform();

    // Precompute each draw's target and look it up by the (distinct) s value.
    std::map<double, std::vector<double>> target_by_s;
    for (int k = 0; k < n; ++k) {
        std::vector<double> point(d), target(d);
        interpolate_into(sched, std::span(x0).subspan(k * d, d),
                         std::span(x1).subspan(k * d, d), s[k],
                         std::span(z).subspan(k * d, d), point, target);
        target_by_s[s[k]] = target;
    }
    FunctionDrift oracle(d, [&](double sk, std::span<const double>, std::span<const double>,
                                std::span<double> out) {
        const auto& t = target_by_s.at(sk);
        std::copy(t.begin(), t.end(), out.begin());
    });
    const double loss = empirical_loss(sched, oracle, PairsView{x0, x1, d, n}, s, z);
    CHECK(loss == 0.0);
}

TEST_CASE("zero drift on one pair with z=0 gives |R|^2 exactly") {
    const Schedule sched = Schedule::quadratic_beta(1.0);
    const std::vector<double> x0{1.0, -2.0}, x1{0.5, 3.0}, z{0.0, 0.0};
    const double s = 0.37;
    std::vector<double> point(2), target(2);
    interpolate_into(sched, x0, x1, s, z, point, target);
    FunctionDrift zero(2, [](double, std::span<const double>, std::span<const double>,
                             std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    });
    const std::vector<double> sd{s};
    const double loss = empirical_loss(sched, zero, PairsView{x0, x1, 2, 1}, sd, z);
    CHECK(loss ==
          doctest::Approx(target[0] * target[0] + target[1] * target[1]).epsilon(1e-14));
    CHECK_THROWS_AS(
        (void)empirical_loss(sched, zero, PairsView{{}, {}, 2, 0}, {}, {}),
        std::invalid_argument);
}

namespace {

// Batch with x0 ~ N(0,I) and x1 ~ mixture (independent), plus fresh (s, z).
void make_gmm_batch(const GmmSpec& spec, std::int64_t n, rng::Stream& stream,
                    std::vector<double>& x0, std::vector<double>& x1,
                    std::vector<double>& s, std::vector<double>& z) {
    const int d = spec.dim;
    const GmmSampler sampler(spec);
    x0.resize(n * d);
    x1.resize(n * d);
    s.resize(n);
    z.resize(n * d);
    for (std::int64_t k = 0; k < n; ++k) {
        for (int i = 0; i < d; ++i) x0[k * d + i] = stream.normal();
        sampler.sample(stream, std::span(x1).subspan(k * d, d));
        s[k] = stream.uniform();
        for (int i = 0; i < d; ++i) z[k * d + i] = stream.normal();
    }
}

}  // namespace

TEST_CASE("constant drift shift raises the loss by |delta|^2 (paired estimator)") {
    GmmSpec spec;
    spec.dim = 1;
    spec.weights = {0.4, 0.6};
    spec.means = {-1.5, 2.0};
    spec.covariances = {0.5, 0.8};
    const Schedule sched = Schedule::quadratic_beta(1.0);
    const AnalyticGmmDrift truth(spec, sched);
    const std::vector<double> delta{0.6};
    const ShiftedDrift shifted(truth, delta);

    const std::int64_t n = 20000;
    rng::Stream stream(99);
    std::vector<double> x0, x1, s, z;
    make_gmm_batch(spec, n, stream, x0, x1, s, z);

    // paired per-sample difference oracle: |b+delta-R|^2 - |b-R|^2
    std::vector<double> diffs(n);
    for (std::int64_t k = 0; k < n; ++k) {
        std::vector<double> point(1), target(1), b(1);
        interpolate_into(sched, std::span(x0).subspan(k, 1), std::span(x1).subspan(k, 1),
                         s[k], std::span(z).subspan(k, 1), point, target);
        truth.eval(s[k], point, std::span(x0).subspan(k, 1), b);
        const double r0 = b[0] - target[0];
        const double r1 = b[0] + delta[0] - target[0];
        diffs[k] = r1 * r1 - r0 * r0;
    }
    const double mean_diff = mean_of(diffs);
    const double se = std::sqrt(variance_of(diffs) / static_cast<double>(n));
    CHECK(std::abs(mean_diff - delta[0] * delta[0]) <= 3.0 * se);

    // empirical_loss computes the same paired difference on shared draws
    const PairsView batch{x0, x1, 1, n};
    const double l_true = empirical_loss(sched, truth, batch, s, z);
    const double l_shift = empirical_loss(sched, shifted, batch, s, z);
    CHECK(l_shift - l_true == doctest::Approx(mean_diff).epsilon(1e-10));
}

TEST_CASE("two fresh-noise loss estimates agree within Monte-Carlo error") {
    GmmSpec spec;
    spec.dim = 1;
    spec.weights = {1.0};
    spec.means = {2.0};
    spec.covariances = {1.0};
    const Schedule sched = Schedule::linear_beta(1.0);
    const AnalyticGmmDrift truth(spec, sched);
    const ShiftedDrift shifted(truth, {0.5});

    const std::int64_t n = 20000;
    auto estimate = [&](std::uint64_t seed, double* se_out) {
        rng::Stream stream(seed);
        std::vector<double> x0, x1, s, z;
        make_gmm_batch(spec, n, stream, x0, x1, s, z);
        const int blocks = 20;
        const std::int64_t bn = n / blocks;
        std::vector<double> block_means(blocks);
        for (int b = 0; b < blocks; ++b) {
            const PairsView view{std::span<const double>(x0).subspan(b * bn, bn),
                                 std::span<const double>(x1).subspan(b * bn, bn), 1, bn};
            block_means[b] = empirical_loss(sched, shifted, view,
                                            std::span<const double>(s).subspan(b * bn, bn),
                                            std::span<const double>(z).subspan(b * bn, bn));
        }
        *se_out = std::sqrt(variance_of(block_means) / blocks);
        return mean_of(block_means);
    };
    double se1 = 0.0, se2 = 0.0;
    const double l1 = estimate(1001, &se1);
    const double l2 = estimate(2002, &se2);
    CHECK(std::abs(l1 - l2) <= 5.0 * std::sqrt(se1 * se1 + se2 * se2));
}
