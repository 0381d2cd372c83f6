#include "sif/linalg.hpp"

#include <cmath>

namespace sif::linalg {

bool cholesky(int n, std::span<double> a) noexcept {
    for (int j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (int k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0)) return false;
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
        for (int i = 0; i < j; ++i) a[i * n + j] = 0.0;
    }
    return true;
}

void cholesky_solve(int n, std::span<const double> l, std::span<const double> b,
                    std::span<double> x) noexcept {
    // forward: L y = b
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= l[i * n + k] * x[k];
        x[i] = s / l[i * n + i];
    }
    // backward: L^T x = y
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int k = i + 1; k < n; ++k) s -= l[k * n + i] * x[k];
        x[i] = s / l[i * n + i];
    }
}

double cholesky_logdet(int n, std::span<const double> l) noexcept {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::log(l[i * n + i]);
    return 2.0 * s;
}

void lower_matvec(int n, std::span<const double> l, std::span<const double> z,
                  std::span<double> x) noexcept {
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k <= i; ++k) s += l[i * n + k] * z[k];
        x[i] = s;
    }
}

void matvec(int rows, int cols, std::span<const double> a, std::span<const double> x,
            std::span<double> y) noexcept {
    for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols; ++j) s += a[i * cols + j] * x[j];
        y[i] = s;
    }
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace sif::linalg
