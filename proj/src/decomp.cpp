// SPDX-License-Identifier: Apache-2.0
#include "slao/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slao/errors.hpp"

namespace slao {

namespace {

// One-sided Jacobi on a tall (rows >= cols) matrix: right-rotates column
// pairs until all columns are mutually orthogonal, so input = u * diag(sigma) * v^T.
struct JacobiSvd {
    Matrix u;                   // rows x cols, orthonormal columns where sigma > 0
    Matrix v;                   // cols x cols, orthogonal
    std::vector<double> sigma;  // unsorted, one per column
};

JacobiSvd jacobi_svd(const Matrix& a) {
    if (a.rows < a.cols) throw DimensionError("jacobi_svd: rows < cols");
    const int n = a.cols;
    const int rows = a.rows;
    Matrix m = a;
    Matrix v = Matrix::identity(n);
    const double tol = 1e-15;
    const int max_sweeps = 60;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < rows; ++i) {
                    app += m(i, p) * m(i, p);
                    aqq += m(i, q) * m(i, q);
                    apq += m(i, p) * m(i, q);
                }
                if (apq == 0.0 || std::abs(apq) <= tol * std::sqrt(app * aqq)) continue;
                rotated = true;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < rows; ++i) {
                    const double mp = m(i, p), mq = m(i, q);
                    m(i, p) = c * mp - s * mq;
                    m(i, q) = s * mp + c * mq;
                }
                for (int i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    JacobiSvd out;
    out.v = std::move(v);
    out.sigma.assign(n, 0.0);
    out.u = Matrix(rows, n);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < rows; ++i) s += m(i, j) * m(i, j);
        const double nrm = std::sqrt(s);
        out.sigma[j] = nrm;
        if (nrm > 0.0) {
            for (int i = 0; i < rows; ++i) out.u(i, j) = m(i, j) / nrm;
        }
    }
    return out;
}

void require_full_column_rank(const Matrix& m, const char* op) {
    const std::vector<double> sv = singular_values(m);
    const double largest = sv.front();
    const double smallest = sv.back();
    if (largest == 0.0 || smallest <= kRankTolerance * largest) {
        throw RankDeficient(std::string(op) + ": column-rank test failed (sigma_min/sigma_max = " +
                            std::to_string(largest > 0.0 ? smallest / largest : 0.0) + ")");
    }
}

}  // namespace

QrResult qr_thin(const Matrix& m) {
    if (m.rows < m.cols) throw DimensionError("qr_thin: rows < cols");
    if (m.cols == 0) throw DimensionError("qr_thin: empty input");
    require_full_column_rank(m, "qr_thin");

    const int rows = m.rows;
    const int cols = m.cols;
    Matrix work = m;
    std::vector<std::vector<double>> reflectors(cols);
    std::vector<double> betas(cols, 0.0);

    for (int k = 0; k < cols; ++k) {
        double norm2 = 0.0;
        for (int i = k; i < rows; ++i) norm2 += work(i, k) * work(i, k);
        const double norm = std::sqrt(norm2);
        const double x0 = work(k, k);
        const double alpha = (x0 >= 0.0) ? -norm : norm;

        std::vector<double> v(rows - k);
        for (int i = k; i < rows; ++i) v[i - k] = work(i, k);
        v[0] -= alpha;
        double vtv = 0.0;
        for (double x : v) vtv += x * x;
        const double beta = (vtv > 0.0) ? 2.0 / vtv : 0.0;

        for (int j = k + 1; j < cols; ++j) {
            double s = 0.0;
            for (int i = k; i < rows; ++i) s += v[i - k] * work(i, j);
            s *= beta;
            for (int i = k; i < rows; ++i) work(i, j) -= s * v[i - k];
        }
        work(k, k) = alpha;
        for (int i = k + 1; i < rows; ++i) work(i, k) = 0.0;
        reflectors[k] = std::move(v);
        betas[k] = beta;
    }

    Matrix r_factor(cols, cols);
    for (int i = 0; i < cols; ++i)
        for (int j = i; j < cols; ++j) r_factor(i, j) = work(i, j);

    // Accumulate Q = H_0 ... H_{cols-1} applied to the thin identity.
    Matrix q(rows, cols);
    for (int k = 0; k < cols; ++k) q(k, k) = 1.0;
    for (int k = cols - 1; k >= 0; --k) {
        const std::vector<double>& v = reflectors[k];
        for (int j = 0; j < cols; ++j) {
            double s = 0.0;
            for (int i = k; i < rows; ++i) s += v[i - k] * q(i, j);
            s *= betas[k];
            for (int i = k; i < rows; ++i) q(i, j) -= s * v[i - k];
        }
    }

    // Sign correction: Q_k <- -Q_k and R row k <- -row k wherever diag(R) < 0.
    // Written as 0.0 - x so zero entries stay +0.0 (bitwise uniqueness).
    for (int k = 0; k < cols; ++k) {
        if (r_factor(k, k) < 0.0) {
            for (int i = 0; i < rows; ++i) q(i, k) = 0.0 - q(i, k);
            for (int j = k; j < cols; ++j) r_factor(k, j) = 0.0 - r_factor(k, j);
        }
    }
    return {std::move(q), std::move(r_factor)};
}

Matrix svd_orthogonalize(const Matrix& m) {
    if (m.rows < m.cols) throw DimensionError("svd_orthogonalize: rows < cols");
    if (m.cols == 0) throw DimensionError("svd_orthogonalize: empty input");
    const JacobiSvd svd = jacobi_svd(m);
    double largest = 0.0, smallest = 0.0;
    for (std::size_t j = 0; j < svd.sigma.size(); ++j) {
        largest = std::max(largest, svd.sigma[j]);
        smallest = (j == 0) ? svd.sigma[j] : std::min(smallest, svd.sigma[j]);
    }
    if (largest == 0.0 || smallest <= kRankTolerance * largest) {
        throw RankDeficient("svd_orthogonalize: column-rank test failed");
    }
    return matmul_nt(svd.u, svd.v);
}

Matrix randomized_svd_orthogonalize(const Matrix& m, int oversample, std::uint64_t seed) {
    if (m.rows < m.cols) throw DimensionError("randomized_svd_orthogonalize: rows < cols");
    if (m.cols == 0) throw DimensionError("randomized_svd_orthogonalize: empty input");
    if (oversample < 0) throw ValidationError("randomized_svd_orthogonalize: oversample must be >= 0");

    // Target rank equals cols, so the sketch width caps at the minimum
    // dimension; a wider sketch would be rank-deficient by construction.
    const int sketch = std::min(m.cols + oversample, std::min(m.rows, m.cols));
    const Matrix omega = gaussian_matrix(m.cols, sketch, 1.0, seed);
    Matrix y = matmul(m, omega);
    for (int it = 0; it < kRsvdPowerIterations; ++it) {
        y = qr_thin(y).q;
        y = matmul(m, matmul_tn(m, y));
    }
    const Matrix q = qr_thin(y).q;
    const Matrix b = matmul_tn(q, m);  // sketch x cols
    const JacobiSvd small = jacobi_svd(b);
    return matmul(q, small.u);
}

std::vector<double> singular_values(const Matrix& m) {
    if (m.rows < m.cols) throw DimensionError("singular_values: rows < cols");
    std::vector<double> sv = jacobi_svd(m).sigma;
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

double spectral_norm(const Matrix& m) {
    const std::vector<double> sv = (m.rows >= m.cols) ? singular_values(m) : singular_values(transpose(m));
    return sv.empty() ? 0.0 : sv.front();
}

double nuclear_norm(const Matrix& m) {
    const std::vector<double> sv = (m.rows >= m.cols) ? singular_values(m) : singular_values(transpose(m));
    double s = 0.0;
    for (double x : sv) s += x;
    return s;
}

}  // namespace slao
