// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "slao/adapter.hpp"
#include "slao/matrix.hpp"
#include "slao/train.hpp"

namespace slao {

// Replayed factor dynamics: under the ansatz A^s = A0 + eta A0 f_a(s) and
// B^s = B0 + eta f_b(s) A0^T the recursions are
//   f_b(s+1) = f_b(s) - G_s (eta f_a(s)^T + I)
//   f_a(s+1) = f_a(s) - eta f_b(s)^T G_s - A0^T B0^T G_s
// where A0 A0^T = I_r makes the B0 term representable. With B0 = 0 the
// reconstruction is exact up to rounding.
struct DynamicsTrace {
    std::vector<Matrix> f_a;      // n x n, entry s for step s, f_a[0] = 0
    std::vector<Matrix> f_b;      // m x n, f_b[0] = 0
    std::vector<Matrix> gradients;
    double eta = 0.0;
    double grad_sum_bound = 0.0;  // L: running max of |sum_{j<=s} G_j|_F
};

DynamicsTrace replay_recursions(const std::vector<Matrix>& gradients, double eta,
                                const Matrix& a0, const Matrix& b0);

Matrix reconstruct_a(const DynamicsTrace& trace, const Matrix& a0, int step);
Matrix reconstruct_b(const DynamicsTrace& trace, const Matrix& a0, const Matrix& b0, int step);

// Spectral-norm check of |f_a(s)|_2 against eta L^2 (1 - (eta^2 L^2)^s) / (1 - eta^2 L^2).
struct FaBoundReport {
    double max_ratio = 0.0;
    double eta_l = 0.0;  // eta * L, must be < 1 for the bound to apply
    bool pass = false;
};
FaBoundReport check_fa_bound(const DynamicsTrace& trace);

// One recorded fine-tune, enough to test the small-eta total-update formula
// delta B ~= -eta (sum_s G_s) A0^T.
struct RecordedRun {
    double eta = 0.0;
    Matrix a0;
    Matrix b0;
    Matrix b_final;
    std::vector<Matrix> gradients;  // applied gradients, step order
};

RecordedRun make_recorded_run(const LoraPair& init, const FinetuneResult& result, double eta);

/// Relative error of the approximation for one run.
double delta_b_relative_error(const RecordedRun& run);

struct DeltaBReport {
    double rel_err_high = 0.0;  // at eta
    double rel_err_low = 0.0;   // at eta/10
    bool pass = false;          // error shrinks with eta
};
DeltaBReport check_delta_b_approx(const RecordedRun& run_high, const RecordedRun& run_low);

struct OrthogonalityMeasures {
    double b_measure = 0.0;  // |(new.b - prev.b)^T prev.b|_F
    double a_measure = 0.0;  // |prev.a (new.a - prev.a)^T|_F
};
OrthogonalityMeasures orthogonality_measures(const LoraPair& prev, const LoraPair& next);

// Linearized predictor a(delta)_j = base_j + <grads_j, delta> with the
// G-Lipschitz loss G * |a - target|_2 (absolute error when K = 1).
struct NtkBoundSpec {
    double lipschitz_g = 1.0;     // G
    double grad_bound_r = 1.0;    // R, |grads_j|_F <= R
    int output_dim = 1;           // K
    double nuclear_bound_d = 1.0; // D, |delta|_* <= D
    std::vector<double> base_outputs;  // K entries
    std::vector<double> target;        // K entries
    std::vector<Matrix> grads;         // K matrices, each m x n
};

struct NtkBoundReport {
    double loss_diff = 0.0;
    double bound_lipschitz = 0.0;     // G |a1 - a2|_2
    double bound_cauchy = 0.0;        // G sqrt(sum_j |d1 - d2|_F^2 |grads_j|_F^2)
    double bound_worst_case = 0.0;    // 2 G R D sqrt(K)
    bool violated = false;
};
NtkBoundReport verify_ntk_bound(const NtkBoundSpec& spec, const Matrix& delta1, const Matrix& delta2);

enum class Component { A, B };

/// t x t symmetric matrix of flattened-component cosine similarities, with an
/// exactly-unit diagonal.
Matrix similarity_matrix(const std::vector<LoraPair>& adapters, Component component);

}  // namespace slao
