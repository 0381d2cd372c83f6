#include "sif/fft.hpp"

#include <numbers>
#include <stdexcept>

namespace sif::fft {

Plan::Plan(int n) : n_(n) {
    if (n < 2 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft::Plan: length must be a power of two >= 2");
    bitrev_.resize(n);
    int log2n = 0;
    while ((1 << log2n) < n) ++log2n;
    for (int i = 0; i < n; ++i) {
        int r = 0;
        for (int b = 0; b < log2n; ++b) r |= ((i >> b) & 1) << (log2n - 1 - b);
        bitrev_[i] = r;
    }
    tw_fwd_.resize(n / 2);
    tw_inv_.resize(n / 2);
    for (int k = 0; k < n / 2; ++k) {
        const double ang = -2.0 * std::numbers::pi * k / n;
        tw_fwd_[k] = {std::cos(ang), std::sin(ang)};
        tw_inv_[k] = {std::cos(ang), -std::sin(ang)};
    }
}

void Plan::transform(std::span<std::complex<double>> a, bool inverse) const {
    const int n = n_;
    for (int i = 0; i < n; ++i) {
        const int r = bitrev_[i];
        if (i < r) std::swap(a[i], a[r]);
    }
    const auto& tw = inverse ? tw_inv_ : tw_fwd_;
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len >> 1;
        const int stride = n / len;
        for (int start = 0; start < n; start += len) {
            for (int k = 0; k < half; ++k) {
                const std::complex<double> w = tw[k * stride];
                const std::complex<double> u = a[start + k];
                const std::complex<double> v = a[start + k + half] * w;
                a[start + k] = u + v;
                a[start + k + half] = u - v;
            }
        }
    }
    if (inverse) {
        const double inv_n = 1.0 / n;
        for (auto& x : a) x *= inv_n;
    }
}

void Plan::forward(std::span<std::complex<double>> a) const { transform(a, false); }
void Plan::inverse(std::span<std::complex<double>> a) const { transform(a, true); }

void forward_2d(const Plan& plan, std::span<std::complex<double>> field) {
    const int n = plan.size();
    for (int r = 0; r < n; ++r) plan.forward(field.subspan(static_cast<std::size_t>(r) * n, n));
    std::vector<std::complex<double>> col(n);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) col[r] = field[static_cast<std::size_t>(r) * n + c];
        plan.forward(col);
        for (int r = 0; r < n; ++r) field[static_cast<std::size_t>(r) * n + c] = col[r];
    }
}

void inverse_2d(const Plan& plan, std::span<std::complex<double>> field) {
    const int n = plan.size();
    for (int r = 0; r < n; ++r) plan.inverse(field.subspan(static_cast<std::size_t>(r) * n, n));
    std::vector<std::complex<double>> col(n);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) col[r] = field[static_cast<std::size_t>(r) * n + c];
        plan.inverse(col);
        for (int r = 0; r < n; ++r) field[static_cast<std::size_t>(r) * n + c] = col[r];
    }
}

}  // namespace sif::fft
