// SPDX-License-Identifier: Apache-2.0
#include "slao/matrix.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "slao/errors.hpp"
#include "slao/rng.hpp"

namespace slao {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
    }
}

}  // namespace

Matrix::Matrix(int r, int c) : rows(r), cols(c) {
    if (r < 0 || c < 0) throw DimensionError("Matrix: negative dimension");
    data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0);
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "operator+");
    Matrix out = a;
    for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] += b.data[k];
    return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "operator-");
    Matrix out = a;
    for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] -= b.data[k];
    return out;
}

Matrix operator*(double s, const Matrix& m) {
    Matrix out = m;
    for (double& x : out.data) x *= s;
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw DimensionError("matmul: inner dimensions " + shape_str(a) + " * " + shape_str(b));
    }
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) {
        throw DimensionError("matmul_tn: inner dimensions " + shape_str(a) + "^T * " + shape_str(b));
    }
    Matrix out(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k) {
        for (int i = 0; i < a.cols; ++i) {
            const double aki = a(k, i);
            if (aki == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out(i, j) += aki * b(k, j);
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) {
        throw DimensionError("matmul_nt: inner dimensions " + shape_str(a) + " * " + shape_str(b) + "^T");
    }
    Matrix out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
            out(i, j) = s;
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
    return out;
}

double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double x : m.data) s += x * x;
    return std::sqrt(s);
}

double max_abs(const Matrix& m) {
    double v = 0.0;
    for (double x : m.data) v = std::max(v, std::abs(x));
    return v;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double v = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) v = std::max(v, std::abs(a.data[k] - b.data[k]));
    return v;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

bool all_finite(const Matrix& m) {
    for (double x : m.data)
        if (!std::isfinite(x)) return false;
    return true;
}

double cosine_similarity_flat(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "cosine_similarity_flat");
    double dot = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) dot += a.data[k] * b.data[k];
    const double na = frobenius_norm(a);
    const double nb = frobenius_norm(b);
    if (na < 1e-300 || nb < 1e-300) throw ZeroVector("cosine_similarity_flat: zero operand");
    return dot / (na * nb);
}

Matrix gaussian_matrix(int rows, int cols, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw ValidationError("gaussian_matrix: sigma must be >= 0");
    Matrix out(rows, cols);
    if (sigma == 0.0) return out;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            out(i, j) = sigma * rng::gaussian(seed, static_cast<std::uint64_t>(i) * cols + j);
        }
    }
    return out;
}

}  // namespace slao
