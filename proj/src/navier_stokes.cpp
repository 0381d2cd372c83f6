#include "sif/navier_stokes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "sif/errors.hpp"

namespace sif {

namespace {

// The 8-mode forcing: quadrature pairs on wavevectors (6,0), (7,0), (5,5),
// (8,8) so the accumulated field is spatially homogeneous with covariance
// min(t,t') [cos 6dx + cos 7dx + cos 5(dx+dy) + cos 8(dx+dy)].
struct ForcingMode {
    int kx;
    int ky;
    bool is_sin;  // sin -> coefficients -i/2 at +k, +i/2 at -k; cos -> 1/2 at both
};

constexpr ForcingMode kForcing[8] = {
    {6, 0, true},  {7, 0, false}, {5, 5, true},  {8, 8, false},
    {6, 0, false}, {7, 0, true},  {5, 5, false}, {8, 8, true},
};

}  // namespace

void NavierStokesConfig::validate() const {
    if (grid < 8 || (grid & (grid - 1)) != 0)
        throw std::invalid_argument("NavierStokesConfig: grid must be a power of two >= 8");
    if (!(viscosity > 0.0) || !(damping >= 0.0) || !(dt > 0.0))
        throw std::invalid_argument("NavierStokesConfig: bad coefficients");
    if (!(snapshot_interval >= dt))
        throw std::invalid_argument("NavierStokesConfig: snapshot interval below dt");
    const double kmax2 = 2.0 * (grid / 2.0) * (grid / 2.0);
    if (!((viscosity * kmax2 + damping) * dt < 1.0))
        throw std::invalid_argument(
            "NavierStokesConfig: explicit step unstable (nu*kmax^2+damping)*dt >= 1");
}

NsSolver::NsSolver(NavierStokesConfig cfg) : cfg_(cfg), plan_(cfg.grid) {
    cfg_.validate();
    const int n = cfg_.grid;
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    w_hat_.assign(nn, {0.0, 0.0});
    ksq_.resize(nn);
    kx_.resize(nn);
    ky_.resize(nn);
    dealias_.resize(nn);
    const int kcut = n / 3;
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * n + c;
            const int kx = fft::wavenumber(c, n);
            const int ky = fft::wavenumber(r, n);
            kx_[i] = kx;
            ky_[i] = ky;
            ksq_[i] = static_cast<double>(kx) * kx + static_cast<double>(ky) * ky;
            dealias_[i] = std::abs(kx) <= kcut && std::abs(ky) <= kcut;
        }
    }
    psi_.resize(nn);
    vx_.resize(nn);
    vy_.resize(nn);
    wx_.resize(nn);
    wy_.resize(nn);
    nl_.resize(nn);
}

void NsSolver::set_vorticity_hat(std::span<const std::complex<double>> w_hat) {
    if (w_hat.size() != w_hat_.size())
        throw std::invalid_argument("NsSolver: spectral field size mismatch");
    std::copy(w_hat.begin(), w_hat.end(), w_hat_.begin());
    for (std::size_t i = 0; i < w_hat_.size(); ++i)
        if (!dealias_[i]) w_hat_[i] = 0.0;
}

std::vector<double> NsSolver::vorticity() const {
    const int n = cfg_.grid;
    const double nn = static_cast<double>(n) * n;
    std::vector<std::complex<double>> tmp(w_hat_);
    for (auto& c : tmp) c *= nn;
    fft::inverse_2d(plan_, tmp);
    std::vector<double> field(tmp.size());
    for (std::size_t i = 0; i < tmp.size(); ++i) field[i] = tmp[i].real();
    return field;
}

void NsSolver::set_vorticity(std::span<const double> field) {
    const int n = cfg_.grid;
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    if (field.size() != nn) throw std::invalid_argument("NsSolver: field size mismatch");
    std::vector<std::complex<double>> tmp(nn);
    for (std::size_t i = 0; i < nn; ++i) tmp[i] = field[i];
    fft::forward_2d(plan_, tmp);
    const double inv_nn = 1.0 / static_cast<double>(nn);
    for (std::size_t i = 0; i < nn; ++i)
        w_hat_[i] = dealias_[i] ? tmp[i] * inv_nn : std::complex<double>{0.0, 0.0};
}

void NsSolver::add_forcing(rng::Stream& stream) {
    const int n = cfg_.grid;
    const double amp = cfg_.forcing_amplitude * std::sqrt(cfg_.dt);
    for (const ForcingMode& mode : kForcing) {
        const double xi = stream.normal();
        const std::size_t ip = static_cast<std::size_t>((mode.ky + n) % n) * n +
                               (mode.kx + n) % n;
        const std::size_t im = static_cast<std::size_t>((n - mode.ky) % n) * n +
                               (n - mode.kx) % n;
        if (mode.is_sin) {
            w_hat_[ip] += std::complex<double>(0.0, -0.5) * (amp * xi);
            w_hat_[im] += std::complex<double>(0.0, 0.5) * (amp * xi);
        } else {
            w_hat_[ip] += 0.5 * amp * xi;
            w_hat_[im] += 0.5 * amp * xi;
        }
    }
}

void NsSolver::step(rng::Stream& stream) {
    const int n = cfg_.grid;
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    const double scale = static_cast<double>(nn);

    // velocity v = (-d_y psi, d_x psi) and vorticity gradient, packed as two
    // real fields per complex transform (real part / imaginary part).
    for (std::size_t i = 0; i < nn; ++i) {
        const std::complex<double> w = w_hat_[i];
        const std::complex<double> psi = ksq_[i] > 0.0 ? w / ksq_[i] : 0.0;
        const std::complex<double> ik_x{0.0, static_cast<double>(kx_[i])};
        const std::complex<double> ik_y{0.0, static_cast<double>(ky_[i])};
        const std::complex<double> vxh = -ik_y * psi;
        const std::complex<double> vyh = ik_x * psi;
        const std::complex<double> wxh = ik_x * w;
        const std::complex<double> wyh = ik_y * w;
        vx_[i] = (vxh + std::complex<double>(0.0, 1.0) * vyh) * scale;  // vx + i vy
        wx_[i] = (wxh + std::complex<double>(0.0, 1.0) * wyh) * scale;  // wx + i wy
    }
    fft::inverse_2d(plan_, vx_);
    fft::inverse_2d(plan_, wx_);
    for (std::size_t i = 0; i < nn; ++i) {
        const double vx = vx_[i].real(), vy = vx_[i].imag();
        const double gx = wx_[i].real(), gy = wx_[i].imag();
        nl_[i] = vx * gx + vy * gy;
    }
    fft::forward_2d(plan_, nl_);

    const double inv_nn = 1.0 / scale;
    const double dt = cfg_.dt;
    for (std::size_t i = 0; i < nn; ++i) {
        if (!dealias_[i]) continue;
        // the advection of a divergence-free velocity has exact zero mean
        const std::complex<double> advect = ksq_[i] > 0.0 ? nl_[i] * inv_nn
                                                          : std::complex<double>{0.0, 0.0};
        w_hat_[i] += dt * (-advect - (cfg_.viscosity * ksq_[i] + cfg_.damping) * w_hat_[i]);
    }
    add_forcing(stream);
    time_ += dt;
    if (++steps_since_check_ >= 50) {
        steps_since_check_ = 0;
        check_blowup();
    }
}

void NsSolver::check_blowup() {
    double max_abs = 0.0;
    for (double v : vorticity()) max_abs = std::max(max_abs, std::abs(v));
    if (!(max_abs < cfg_.blowup_threshold))
        throw NumericError("NsSolver: vorticity blow-up (max |omega| = " +
                           std::to_string(max_abs) + ") at t=" + std::to_string(time_));
}

std::vector<double> enstrophy_spectrum_hat(std::span<const std::complex<double>> w_hat,
                                           int n) {
    if (w_hat.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("enstrophy_spectrum: field is not n x n");
    const int max_shell = static_cast<int>(std::floor(std::sqrt(2.0) * (n / 2))) + 1;
    std::vector<double> shells(static_cast<std::size_t>(max_shell) + 1, 0.0);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const double kx = fft::wavenumber(c, n);
            const double ky = fft::wavenumber(r, n);
            const double kmag = std::sqrt(kx * kx + ky * ky);
            const int shell = static_cast<int>(std::floor(kmag));
            const auto v = w_hat[static_cast<std::size_t>(r) * n + c];
            shells[shell] += std::norm(v);
        }
    }
    return shells;
}

std::vector<double> enstrophy_spectrum(std::span<const double> field, int n) {
    if (field.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("enstrophy_spectrum: field is not n x n");
    fft::Plan plan(n);
    std::vector<std::complex<double>> tmp(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) tmp[i] = field[i];
    fft::forward_2d(plan, tmp);
    const double inv_nn = 1.0 / (static_cast<double>(n) * n);
    for (auto& c : tmp) c *= inv_nn;
    return enstrophy_spectrum_hat(tmp, n);
}

std::vector<double> downsample_spectral(std::span<const double> field, int n,
                                        int target_n) {
    if (field.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("downsample_spectral: field is not n x n");
    if (target_n < 2 || target_n > n || (target_n & (target_n - 1)) != 0)
        throw std::invalid_argument(
            "downsample_spectral: target must be a power of two <= n");
    fft::Plan fine(n);
    std::vector<std::complex<double>> w(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) w[i] = field[i];
    fft::forward_2d(fine, w);
    const double inv_nn = 1.0 / (static_cast<double>(n) * n);

    // transfer modes with |kx|,|ky| < target_n/2 (the coarse Nyquist band is
    // dropped so the coarse field stays real and unambiguous)
    fft::Plan coarse(target_n);
    std::vector<std::complex<double>> wc(static_cast<std::size_t>(target_n) * target_n,
                                         {0.0, 0.0});
    const int kmax = target_n / 2 - 1;
    for (int r = 0; r < n; ++r) {
        const int ky = fft::wavenumber(r, n);
        if (std::abs(ky) > kmax) continue;
        for (int c = 0; c < n; ++c) {
            const int kx = fft::wavenumber(c, n);
            if (std::abs(kx) > kmax) continue;
            const std::size_t dst = static_cast<std::size_t>((ky + target_n) % target_n) *
                                        target_n +
                                    (kx + target_n) % target_n;
            wc[dst] = w[static_cast<std::size_t>(r) * n + c] * inv_nn;
        }
    }
    const double tn2 = static_cast<double>(target_n) * target_n;
    for (auto& cplx : wc) cplx *= tn2;
    fft::inverse_2d(coarse, wc);
    std::vector<double> out(wc.size());
    for (std::size_t i = 0; i < wc.size(); ++i) out[i] = wc[i].real();
    return out;
}

TransitionDataset simulate_ns(const NavierStokesConfig& cfg, std::int64_t n_snapshots,
                              double burn_in_time) {
    cfg.validate();
    if (n_snapshots < 2)
        throw std::invalid_argument("simulate_ns: need at least 2 snapshots");
    NsSolver solver(cfg);
    rng::Stream stream = rng::Stream::keyed(cfg.seed, 0x2d5e);
    const std::int64_t burn_steps =
        static_cast<std::int64_t>(std::llround(burn_in_time / cfg.dt));
    const std::int64_t steps_per_snap =
        static_cast<std::int64_t>(std::llround(cfg.snapshot_interval / cfg.dt));
    for (std::int64_t i = 0; i < burn_steps; ++i) solver.step(stream);

    const std::size_t nn = static_cast<std::size_t>(cfg.grid) * cfg.grid;
    std::vector<std::vector<double>> snaps;
    snaps.reserve(static_cast<std::size_t>(n_snapshots));
    snaps.push_back(solver.vorticity());
    for (std::int64_t s = 1; s < n_snapshots; ++s) {
        for (std::int64_t i = 0; i < steps_per_snap; ++i) solver.step(stream);
        snaps.push_back(solver.vorticity());
    }

    // Rescale so the mean flattened 2-norm over emitted snapshots is exactly 1.
    double norm_sum = 0.0;
    for (const auto& f : snaps) {
        double sq = 0.0;
        for (double v : f) sq += v * v;
        norm_sum += std::sqrt(sq);
    }
    const double scale = norm_sum / static_cast<double>(snaps.size());
    if (!(scale > 0.0)) throw NumericError("simulate_ns: degenerate snapshot norms");
    for (auto& f : snaps)
        for (double& v : f) v /= scale;

    TransitionDataset ds;
    ds.dim = static_cast<int>(nn);
    ds.lag = cfg.snapshot_interval;
    ds.normalization_scale = scale;
    ds.task = "navier_stokes";
    ds.seed = cfg.seed;
    const std::int64_t n_pairs = n_snapshots - 1;
    ds.x0.resize(static_cast<std::size_t>(n_pairs) * nn);
    ds.x1.resize(static_cast<std::size_t>(n_pairs) * nn);
    for (std::int64_t k = 0; k < n_pairs; ++k) {
        std::copy(snaps[k].begin(), snaps[k].end(), ds.x0.begin() + k * nn);
        std::copy(snaps[k + 1].begin(), snaps[k + 1].end(), ds.x1.begin() + k * nn);
    }

    // Pooled lagged autocorrelation over grid points, recorded for reference.
    auto autocorr = [&](std::int64_t lag_snaps) {
        double mean = 0.0;
        for (const auto& f : snaps)
            for (double v : f) mean += v;
        mean /= static_cast<double>(snaps.size() * nn);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k + lag_snaps < snaps.size(); ++k)
            for (std::size_t i = 0; i < nn; ++i)
                num += (snaps[k][i] - mean) * (snaps[k + lag_snaps][i] - mean);
        for (const auto& f : snaps)
            for (double v : f) den += (v - mean) * (v - mean);
        den *= static_cast<double>(snaps.size() - lag_snaps) / snaps.size();
        return den > 0.0 ? num / den : 0.0;
    };
    nlohmann::json extra;
    extra["grid"] = cfg.grid;
    extra["viscosity"] = cfg.viscosity;
    extra["damping"] = cfg.damping;
    extra["forcing_amplitude"] = cfg.forcing_amplitude;
    extra["dt"] = cfg.dt;
    extra["burn_in_time"] = burn_in_time;
    extra["autocorr_1_snapshot"] = autocorr(1);
    if (n_snapshots > 2) extra["autocorr_2_snapshots"] = autocorr(2);
    ds.extra_json = extra.dump();
    return ds;
}

}  // namespace sif
