#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "sif/dataset.hpp"
#include "sif/fft.hpp"
#include "sif/rng.hpp"

namespace sif {

// Stochastically forced 2-D vorticity equation on the torus [0,2pi]^2:
//   d omega + v . grad omega dt = nu Lap omega dt - damping omega dt + eps d eta
// integrated pseudo-spectrally (2/3-rule dealiasing) with Euler-Maruyama.
struct NavierStokesConfig {
    int grid = 64;                    // n x n, power of two
    double viscosity = 1e-3;          // nu
    double damping = 0.1;             // linear drag on all modes
    double forcing_amplitude = 1.0;   // eps multiplying the 8-mode forcing
    double dt = 1e-4;
    double snapshot_interval = 0.5;
    std::uint64_t seed = 0;
    double blowup_threshold = 1e3;    // abort when max|omega| exceeds this

    void validate() const;  // power-of-two grid + diffusive stability bound
};

class NsSolver {
public:
    explicit NsSolver(NavierStokesConfig cfg);

    const NavierStokesConfig& config() const noexcept { return cfg_; }
    int grid() const noexcept { return cfg_.grid; }

    // Spectral state: coefficients w_hat(m) with omega(x) = sum w_hat(m) e^{i m.x}.
    std::span<const std::complex<double>> vorticity_hat() const noexcept { return w_hat_; }
    void set_vorticity_hat(std::span<const std::complex<double>> w_hat);

    std::vector<double> vorticity() const;               // physical field (n x n)
    void set_vorticity(std::span<const double> field);   // from physical samples

    // One Euler-Maruyama step; consumes 8 normals. Throws NumericError on
    // blow-up (reports the accumulated simulation time).
    void step(rng::Stream& stream);

    // Forcing injection alone (test/diagnostic hook): adds
    // eps * sqrt(dt) * sum_i xi_i * basis_i in spectral space.
    void add_forcing(rng::Stream& stream);

    double time() const noexcept { return time_; }

private:
    void check_blowup();
    NavierStokesConfig cfg_;
    fft::Plan plan_;
    double time_ = 0.0;
    std::vector<std::complex<double>> w_hat_;
    std::vector<double> ksq_;     // |m|^2 per site
    std::vector<int> kx_, ky_;
    std::vector<bool> dealias_;   // keep-mask (2/3 rule)
    // scratch
    std::vector<std::complex<double>> psi_, vx_, vy_, wx_, wy_, nl_;
    std::int64_t steps_since_check_ = 0;
};

// Enstrophy shell sums over integer annuli k <= |m| < k+1 of the spectral
// coefficients; entry k of the returned curve is sum |w_hat(m)|^2 over the
// shell, and the total over shells equals sum_m |w_hat(m)|^2.
std::vector<double> enstrophy_spectrum(std::span<const double> field, int n);
std::vector<double> enstrophy_spectrum_hat(std::span<const std::complex<double>> w_hat,
                                           int n);

// Spectral truncation onto a coarser power-of-two grid: keeps the Fourier
// coefficients resolvable at the target resolution and drops the rest. Used
// to build low-resolution conditioning states from full-resolution fields.
std::vector<double> downsample_spectral(std::span<const double> field, int n,
                                        int target_n);

// Runs the solver from rest, drops burn_in_time, then collects n_snapshots
// at the configured interval and emits consecutive pairs. Snapshots are
// rescaled so the mean flattened 2-norm over the emitted set is exactly 1;
// the scale is stored in the dataset.
TransitionDataset simulate_ns(const NavierStokesConfig& cfg, std::int64_t n_snapshots,
                              double burn_in_time);

}  // namespace sif
