// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace slao {

// Dense row-major matrix of 64-bit floats, the universal numeric carrier.
// Value type: copy/move freely, no shared state.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // length rows*cols, row-major

    Matrix() = default;
    Matrix(int r, int c);

    static Matrix zeros(int r, int c) { return Matrix(r, c); }
    static Matrix identity(int n);

    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& m);

Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix transpose(const Matrix& m);

double frobenius_norm(const Matrix& m);
double max_abs(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool bitwise_equal(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& m);

// <vec(a), vec(b)> / (|a|_F |b|_F). Throws ZeroVector if either norm < 1e-300.
double cosine_similarity_flat(const Matrix& a, const Matrix& b);

// i.i.d. N(0, sigma^2) entries; entry (i,j) depends only on (seed, i*cols+j).
Matrix gaussian_matrix(int rows, int cols, double sigma, std::uint64_t seed);

}  // namespace slao
