#pragma once

#include <span>

namespace sif::linalg {

// In-place lower Cholesky factor of a row-major n x n symmetric
// positive-definite matrix. The strict upper triangle is zeroed.
// Returns false on a non-positive pivot.
bool cholesky(int n, std::span<double> a) noexcept;

// Solve L L^T x = b given the lower factor from cholesky().
void cholesky_solve(int n, std::span<const double> l, std::span<const double> b,
                    std::span<double> x) noexcept;

// log det(L L^T) = 2 sum log L_ii.
double cholesky_logdet(int n, std::span<const double> l) noexcept;

// x := L z for the lower factor (used to sample N(0, L L^T)).
void lower_matvec(int n, std::span<const double> l, std::span<const double> z,
                  std::span<double> x) noexcept;

void matvec(int rows, int cols, std::span<const double> a, std::span<const double> x,
            std::span<double> y) noexcept;

double dot(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace sif::linalg
