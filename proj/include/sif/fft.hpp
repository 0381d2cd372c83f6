#pragma once

#include <complex>
#include <span>
#include <vector>

namespace sif::fft {

// Radix-2 complex FFT plan for a fixed power-of-two length. forward computes
// the unnormalized DFT sum_j x_j e^{-2*pi*i*jk/n}; inverse applies the 1/n
// factor so inverse(forward(x)) == x.
class Plan {
public:
    explicit Plan(int n);

    int size() const noexcept { return n_; }
    void forward(std::span<std::complex<double>> a) const;
    void inverse(std::span<std::complex<double>> a) const;

private:
    void transform(std::span<std::complex<double>> a, bool inverse) const;
    int n_;
    std::vector<int> bitrev_;
    std::vector<std::complex<double>> tw_fwd_;
    std::vector<std::complex<double>> tw_inv_;
};

// In-place 2-D transforms over a row-major n x n grid.
void forward_2d(const Plan& plan, std::span<std::complex<double>> field);
void inverse_2d(const Plan& plan, std::span<std::complex<double>> field);

// Signed wavenumber for index j on an n-point grid: j for j <= n/2, j-n above.
inline int wavenumber(int j, int n) noexcept { return j <= n / 2 ? j : j - n; }

}  // namespace sif::fft
