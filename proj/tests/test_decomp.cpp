// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "slao/decomp.hpp"
#include "slao/errors.hpp"
#include "slao/rng.hpp"
#include "test_util.hpp"

using namespace slao;
using namespace slao::testutil;

TEST_CASE("qr of identity is identity") {
    const QrResult qr = qr_thin(Matrix::identity(2));
    CHECK(bitwise_equal(qr.q, Matrix::identity(2)));
    CHECK(bitwise_equal(qr.r_factor, Matrix::identity(2)));
}

TEST_CASE("qr of a single column matches hand Gram-Schmidt") {
    Matrix m(2, 1);
    m(0, 0) = 3.0;
    m(1, 0) = 4.0;
    const QrResult qr = qr_thin(m);
    CHECK(qr.q(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(qr.q(1, 0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(qr.r_factor(0, 0) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("qr reconstruction, orthonormality, and sign convention") {
    const Matrix m = gaussian_matrix(6, 3, 1.0, 7);
    const QrResult qr = qr_thin(m);
    CHECK(max_gram_deviation(qr.q) < 1e-10);
    CHECK(relative_frobenius_error(matmul(qr.q, qr.r_factor), m) < 1e-10);
    for (int k = 0; k < 3; ++k) CHECK(qr.r_factor(k, k) >= 0.0);
    for (int i = 1; i < 3; ++i)
        for (int j = 0; j < i; ++j) CHECK(qr.r_factor(i, j) == 0.0);

    // Determinism: the sign correction leaves no +- ambiguity between calls.
    const QrResult again = qr_thin(m);
    CHECK(bitwise_equal(qr.q, again.q));
    CHECK(bitwise_equal(qr.r_factor, again.r_factor));
}

TEST_CASE("qr rejects bad inputs") {
    CHECK_THROWS_AS(qr_thin(gaussian_matrix(2, 5, 1.0, 3)), DimensionError);

    Matrix dependent(4, 2);  // second column is twice the first
    for (int i = 0; i < 4; ++i) {
        dependent(i, 0) = i + 1.0;
        dependent(i, 1) = 2.0 * (i + 1.0);
    }
    CHECK_THROWS_AS(qr_thin(dependent), RankDeficient);
    CHECK_THROWS_AS(qr_thin(Matrix::zeros(3, 2)), RankDeficient);
}

TEST_CASE("svd orthogonalize basic contracts") {
    // Positive diagonal input: U = V = I.
    Matrix diag(2, 2);
    diag(0, 0) = 2.0;
    diag(1, 1) = 3.0;
    CHECK(bitwise_equal(svd_orthogonalize(diag), Matrix::identity(2)));

    // Already orthonormal columns come back essentially unchanged.
    const Matrix q = qr_thin(gaussian_matrix(5, 3, 1.0, 11)).q;
    const Matrix out = svd_orthogonalize(q);
    CHECK(max_gram_deviation(out) < 1e-10);
    CHECK(max_abs_diff(out, q) < 1e-10);

    const Matrix m = gaussian_matrix(6, 3, 1.0, 12);
    const Matrix o = svd_orthogonalize(m);
    CHECK(max_gram_deviation(o) < 1e-10);
    CHECK(max_principal_angle(o, m) < 1e-8);

    CHECK_THROWS_AS(svd_orthogonalize(Matrix::zeros(3, 2)), RankDeficient);
}

TEST_CASE("randomized svd orthogonalize") {
    const Matrix m = gaussian_matrix(12, 4, 1.0, 21);
    const Matrix a = randomized_svd_orthogonalize(m, 4, 77);
    const Matrix b = randomized_svd_orthogonalize(m, 4, 77);
    CHECK(bitwise_equal(a, b));
    CHECK(max_gram_deviation(a) < 1e-8);
    CHECK(max_principal_angle(a, svd_orthogonalize(m)) < 1e-6);
    CHECK_FALSE(bitwise_equal(a, randomized_svd_orthogonalize(m, 4, 78)));
}

TEST_CASE("qr and svd span the same column space") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const int rows = 4 + static_cast<int>(rng::at(seed, 0) % 12);
        const int cols = 1 + static_cast<int>(rng::at(seed, 1) % 4);
        const Matrix m = gaussian_matrix(rows, cols, 1.0, rng::derive(seed, 2));
        CHECK(max_principal_angle(qr_thin(m).q, svd_orthogonalize(m)) < 1e-8);
    }
}

TEST_CASE("singular values of a known matrix") {
    Matrix m(2, 2);  // singular values 3 and 2
    m(0, 0) = 3.0;
    m(1, 1) = 2.0;
    const std::vector<double> sv = singular_values(m);
    CHECK(sv[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(sv[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(spectral_norm(m) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(nuclear_norm(m) == doctest::Approx(5.0).epsilon(1e-14));

    // Wide input goes through the transpose: top singular value still found.
    Matrix wide(2, 6);
    wide(0, 0) = 3.0;
    wide(1, 1) = 2.0;
    CHECK(spectral_norm(wide) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(nuclear_norm(wide) == doctest::Approx(5.0).epsilon(1e-14));
}
