// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "slao/matrix.hpp"

namespace slao {

struct QrResult {
    Matrix q;         // rows x cols, orthonormal columns
    Matrix r_factor;  // cols x cols, upper-triangular, nonnegative diagonal
};

/// Thin QR of an input with rows >= cols and full column rank, computed by
/// Householder reflections. After the factorization every column of Q is
/// flipped so the matching diagonal of R is nonnegative (the R row is flipped
/// with it), which removes the sign ambiguity: two calls on the same input
/// agree bitwise.
///
/// Throws DimensionError if rows < cols, RankDeficient if the smallest
/// singular value is <= 1e-12 times the largest.
QrResult qr_thin(const Matrix& m);

/// Orthonormal-column factor U*V^T from the SVD of the input (one-sided
/// Jacobi). Same column space as the input; same preconditions as qr_thin.
Matrix svd_orthogonalize(const Matrix& m);

/// Orthonormal-column factor Q*U from a randomized SVD: Gaussian sketch of
/// width min(cols + oversample, rows, cols), two power iterations with
/// re-orthonormalization, then the small-factor SVD. Deterministic for a
/// fixed seed.
Matrix randomized_svd_orthogonalize(const Matrix& m, int oversample, std::uint64_t seed);

/// Singular values in descending order (one-sided Jacobi; requires rows >= cols).
std::vector<double> singular_values(const Matrix& m);

double spectral_norm(const Matrix& m);  // largest singular value, any shape
double nuclear_norm(const Matrix& m);   // sum of singular values, any shape

inline constexpr double kRankTolerance = 1e-12;  // relative sigma_min threshold
inline constexpr int kRsvdPowerIterations = 2;
inline constexpr int kRsvdDefaultOversample = 8;

}  // namespace slao
