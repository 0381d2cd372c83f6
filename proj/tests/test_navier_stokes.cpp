#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <json.hpp>

#include "sif/errors.hpp"
#include "sif/fft.hpp"
#include "sif/navier_stokes.hpp"
#include "sif/stats.hpp"

using namespace sif;

namespace {

std::vector<double> cosine_mode(int n, int kx, int ky, double amplitude = 1.0) {
    std::vector<double> field(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double x = 2.0 * std::numbers::pi * c / n;
            const double y = 2.0 * std::numbers::pi * r / n;
            field[static_cast<std::size_t>(r) * n + c] = amplitude * std::cos(kx * x + ky * y);
        }
    return field;
}

}  // namespace

TEST_CASE("fft round trip and mode extraction") {
    fft::Plan plan(32);
    rng::Stream stream(5);
    std::vector<std::complex<double>> a(32);
    for (auto& v : a) v = {stream.normal(), stream.normal()};
    auto b = a;
    plan.forward(b);
    plan.inverse(b);
    for (int i = 0; i < 32; ++i) {
        CHECK(b[i].real() == doctest::Approx(a[i].real()).epsilon(1e-12));
        CHECK(b[i].imag() == doctest::Approx(a[i].imag()).epsilon(1e-12));
    }
}

TEST_CASE("config validation: power-of-two grid and stable step") {
    NavierStokesConfig cfg;
    cfg.grid = 48;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.grid = 64;
    CHECK_NOTHROW(cfg.validate());
    cfg.dt = 1.0;  // (nu kmax^2 + damping) dt >= 1
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("zero field with zero forcing stays zero") {
    NavierStokesConfig cfg;
    cfg.grid = 32;
    cfg.forcing_amplitude = 0.0;
    NsSolver solver(cfg);
    rng::Stream stream(1);
    for (int i = 0; i < 10; ++i) solver.step(stream);
    for (const auto& c : solver.vorticity_hat()) CHECK(std::abs(c) == 0.0);
}

TEST_CASE("unforced single modes decay at exactly 1 - (nu k^2 + damping) dt per step") {
    NavierStokesConfig cfg;
    cfg.grid = 64;
    cfg.forcing_amplitude = 0.0;
    cfg.dt = 1e-4;
    const int modes[4][2] = {{1, 0}, {0, 5}, {3, 4}, {10, 7}};
    for (const auto& m : modes) {
        NsSolver solver(cfg);
        rng::Stream stream(2);
        solver.set_vorticity(cosine_mode(cfg.grid, m[0], m[1]));
        const auto before = std::vector<std::complex<double>>(
            solver.vorticity_hat().begin(), solver.vorticity_hat().end());
        const std::size_t idx =
            static_cast<std::size_t>((m[1] + cfg.grid) % cfg.grid) * cfg.grid +
            (m[0] + cfg.grid) % cfg.grid;
        REQUIRE(std::abs(before[idx]) > 0.49);
        solver.step(stream);
        const double k2 = static_cast<double>(m[0]) * m[0] + static_cast<double>(m[1]) * m[1];
        const double expect = 1.0 - (cfg.viscosity * k2 + cfg.damping) * cfg.dt;
        const double ratio = solver.vorticity_hat()[idx].real() / before[idx].real();
        CHECK(std::abs(ratio - expect) < 1e-6);
    }
}

TEST_CASE("mean vorticity stays zero under forcing and dynamics") {
    NavierStokesConfig cfg;
    cfg.grid = 32;
    cfg.dt = 1e-3;
    NsSolver solver(cfg);
    rng::Stream stream(3);
    for (int i = 0; i < 500; ++i) solver.step(stream);
    CHECK(std::abs(solver.vorticity_hat()[0]) == 0.0);
    const auto field = solver.vorticity();
    double mean = 0.0;
    for (double v : field) mean += v;
    CHECK(std::abs(mean / field.size()) < 1e-12);
}

TEST_CASE("enstrophy spectrum: single mode, Parseval bookkeeping, zero field") {
    const int n = 64;
    const auto curve = enstrophy_spectrum(cosine_mode(n, 6, 0), n);
    for (std::size_t k = 0; k < curve.size(); ++k) {
        if (k == 6)
            CHECK(curve[k] == doctest::Approx(0.5).epsilon(1e-10));
        else
            CHECK(std::abs(curve[k]) < 1e-12);
    }

    // random field: shell sums equal a brute-force double loop over modes
    rng::Stream stream(7);
    std::vector<double> field(static_cast<std::size_t>(n) * n);
    for (auto& v : field) v = stream.normal();
    const auto shells = enstrophy_spectrum(field, n);

    fft::Plan plan(n);
    std::vector<std::complex<double>> w(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) w[i] = field[i];
    fft::forward_2d(plan, w);
    for (auto& c : w) c /= static_cast<double>(n) * n;
    std::vector<double> brute(shells.size(), 0.0);
    double total = 0.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double kx = fft::wavenumber(c, n);
            const double ky = fft::wavenumber(r, n);
            const double mag = std::sqrt(kx * kx + ky * ky);
            const double e = std::norm(w[static_cast<std::size_t>(r) * n + c]);
            brute[static_cast<std::size_t>(std::floor(mag))] += e;
            total += e;
        }
    double shell_total = 0.0;
    for (std::size_t k = 0; k < shells.size(); ++k) {
        CHECK(std::abs(shells[k] - brute[k]) < 1e-10);
        shell_total += shells[k];
    }
    CHECK(std::abs(shell_total - total) < 1e-10);

    const auto zero = enstrophy_spectrum(std::vector<double>(n * n, 0.0), n);
    for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("accumulated forcing has the advertised space-time covariance") {
    NavierStokesConfig cfg;
    cfg.grid = 32;
    cfg.dt = 1e-3;
    cfg.forcing_amplitude = 1.0;

    const int n = cfg.grid;
    const int realizations = 1500;
    const int steps_t1 = 25, steps_t2 = 50;
    const double t1 = steps_t1 * cfg.dt, t2 = steps_t2 * cfg.dt;

    // probe grid points (row, col)
    const int probes[3][2] = {{0, 0}, {5, 12}, {17, 3}};
    std::vector<std::vector<double>> f_t1(3, std::vector<double>(realizations));
    std::vector<std::vector<double>> f_t2(3, std::vector<double>(realizations));

    for (int r = 0; r < realizations; ++r) {
        NsSolver solver(cfg);
        rng::Stream stream = rng::Stream::keyed(404, r);
        for (int i = 0; i < steps_t1; ++i) solver.add_forcing(stream);
        const auto snap1 = solver.vorticity();
        for (int i = steps_t1; i < steps_t2; ++i) solver.add_forcing(stream);
        const auto snap2 = solver.vorticity();
        for (int p = 0; p < 3; ++p) {
            f_t1[p][r] = snap1[probes[p][0] * n + probes[p][1]];
            f_t2[p][r] = snap2[probes[p][0] * n + probes[p][1]];
        }
    }

    auto kernel = [&](int p, int q) {
        const double dx = 2.0 * std::numbers::pi * (probes[p][1] - probes[q][1]) / n;
        const double dy = 2.0 * std::numbers::pi * (probes[p][0] - probes[q][0]) / n;
        return std::cos(6 * dx) + std::cos(7 * dx) + std::cos(5 * (dx + dy)) +
               std::cos(8 * (dx + dy));
    };
    auto check_cov = [&](const std::vector<double>& a, const std::vector<double>& b,
                         double want) {
        const double ma = mean_of(a), mb = mean_of(b);
        std::vector<double> prod(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) prod[i] = (a[i] - ma) * (b[i] - mb);
        const double cov = mean_of(prod);
        const double se = std::sqrt(variance_of(prod) / prod.size());
        CHECK(std::abs(cov - want) <= 3.0 * se + 1e-4);
    };

    // same-time covariances at several point pairs: min(t1,t1) * K(dx)
    for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) check_cov(f_t1[p], f_t1[q], t1 * kernel(p, q));
    // cross-time covariance: min(t1,t2) * K(dx)
    for (int p = 0; p < 3; ++p) check_cov(f_t1[p], f_t2[p], std::min(t1, t2) * kernel(p, p));
}

TEST_CASE("simulate_ns normalizes snapshots and stays bounded") {
    NavierStokesConfig cfg;
    cfg.grid = 32;
    cfg.dt = 5e-4;
    cfg.snapshot_interval = 0.25;
    cfg.seed = 11;
    const TransitionDataset ds = simulate_ns(cfg, 8, 1.0);
    CHECK(ds.dim == 32 * 32);
    CHECK(ds.size() == 7);
    CHECK(ds.lag == doctest::Approx(0.25));
    CHECK(ds.normalization_scale > 0.0);

    // the emitted snapshots are x0[0..n-1] plus the last x1: mean norm == 1
    std::vector<double> norms;
    for (std::int64_t k = 0; k < ds.size(); ++k) {
        double sq = 0.0;
        for (int i = 0; i < ds.dim; ++i) sq += ds.x0[k * ds.dim + i] * ds.x0[k * ds.dim + i];
        norms.push_back(std::sqrt(sq));
    }
    {
        double sq = 0.0;
        const std::int64_t last = ds.size() - 1;
        for (int i = 0; i < ds.dim; ++i) sq += ds.x1[last * ds.dim + i] * ds.x1[last * ds.dim + i];
        norms.push_back(std::sqrt(sq));
    }
    CHECK(mean_of(norms) == doctest::Approx(1.0).epsilon(1e-12));

    const auto extra = nlohmann::json::parse(ds.extra_json);
    CHECK(extra.contains("autocorr_1_snapshot"));
    CHECK(std::abs(extra["autocorr_1_snapshot"].get<double>()) <= 1.001);

    // chaining: x1 of pair k equals x0 of pair k+1
    for (int i = 0; i < ds.dim; ++i) CHECK(ds.x1[i] == ds.x0[ds.dim + i]);
}

TEST_CASE("spectral downsampling preserves resolvable modes and drops the rest") {
    const int n = 64, target = 16;
    // one mode inside the coarse band, one outside
    std::vector<double> field = cosine_mode(n, 3, 2, 1.0);
    const auto extra = cosine_mode(n, 20, 0, 0.7);
    for (std::size_t i = 0; i < field.size(); ++i) field[i] += extra[i];

    const auto coarse = downsample_spectral(field, n, target);
    REQUIRE(coarse.size() == static_cast<std::size_t>(target) * target);
    const auto expect = cosine_mode(target, 3, 2, 1.0);
    for (std::size_t i = 0; i < coarse.size(); ++i)
        CHECK(coarse[i] == doctest::Approx(expect[i]).epsilon(1e-10));

    // band-limited fields survive exactly; sampling identity on the same grid
    const auto same = downsample_spectral(cosine_mode(n, 5, -4), n, n);
    const auto orig = cosine_mode(n, 5, -4);
    for (std::size_t i = 0; i < same.size(); ++i)
        CHECK(same[i] == doctest::Approx(orig[i]).epsilon(1e-10));

    CHECK_THROWS_AS((void)downsample_spectral(field, n, 24), std::invalid_argument);
    CHECK_THROWS_AS((void)downsample_spectral(field, n, 128), std::invalid_argument);
}

TEST_CASE("blow-up detection reports the simulation time") {
    NavierStokesConfig cfg;
    cfg.grid = 32;
    cfg.dt = 1e-3;
    cfg.blowup_threshold = 1e-6;  // triggers as soon as the forcing acts
    NsSolver solver(cfg);
    rng::Stream stream(1);
    CHECK_THROWS_AS(
        [&] {
            for (int i = 0; i < 200; ++i) solver.step(stream);
        }(),
        NumericError);
}
