// SPDX-License-Identifier: Apache-2.0
#include "slao/dynamics.hpp"

#include <cmath>
#include <string>

#include "slao/decomp.hpp"
#include "slao/errors.hpp"

namespace slao {

namespace {

void require_row_orthonormal(const Matrix& a0, double tol, const char* op) {
    const Matrix gram = matmul_nt(a0, a0);
    double dev = 0.0;
    for (int i = 0; i < gram.rows; ++i) {
        for (int j = 0; j < gram.cols; ++j) {
            dev = std::max(dev, std::abs(gram(i, j) - (i == j ? 1.0 : 0.0)));
        }
    }
    if (dev > tol) {
        throw PreconditionError(std::string(op) + ": a0 rows not orthonormal (deviation " +
                                std::to_string(dev) + ")");
    }
}

}  // namespace

DynamicsTrace replay_recursions(const std::vector<Matrix>& gradients, double eta,
                                const Matrix& a0, const Matrix& b0) {
    const int r = a0.rows;
    const int n = a0.cols;
    const int m = b0.rows;
    if (b0.cols != r) throw ShapeError("replay_recursions: b0 columns must equal a0 rows");
    require_row_orthonormal(a0, 1e-8, "replay_recursions");

    DynamicsTrace trace;
    trace.eta = eta;
    trace.gradients = gradients;
    trace.f_a.push_back(Matrix::zeros(n, n));
    trace.f_b.push_back(Matrix::zeros(m, n));

    const Matrix a0t_b0t = matmul_tn(a0, transpose(b0));  // n x m
    Matrix grad_sum = Matrix::zeros(m, n);
    for (const Matrix& g : gradients) {
        if (g.rows != m || g.cols != n) throw ShapeError("replay_recursions: gradient shape mismatch");
        const Matrix& fa = trace.f_a.back();
        const Matrix& fb = trace.f_b.back();
        // f_b(s+1) = f_b(s) - G (eta f_a(s)^T + I)
        Matrix fb_next = fb - (eta * matmul_nt(g, fa)) - g;
        // f_a(s+1) = f_a(s) - eta f_b(s)^T G - A0^T B0^T G
        Matrix fa_next = fa - (eta * matmul_tn(fb, g)) - matmul(a0t_b0t, g);
        trace.f_b.push_back(std::move(fb_next));
        trace.f_a.push_back(std::move(fa_next));
        grad_sum = grad_sum + g;
        trace.grad_sum_bound = std::max(trace.grad_sum_bound, frobenius_norm(grad_sum));
    }
    return trace;
}

Matrix reconstruct_a(const DynamicsTrace& trace, const Matrix& a0, int step) {
    return a0 + trace.eta * matmul(a0, trace.f_a.at(static_cast<std::size_t>(step)));
}

Matrix reconstruct_b(const DynamicsTrace& trace, const Matrix& a0, const Matrix& b0, int step) {
    return b0 + trace.eta * matmul_nt(trace.f_b.at(static_cast<std::size_t>(step)), a0);
}

FaBoundReport check_fa_bound(const DynamicsTrace& trace) {
    FaBoundReport report;
    const double l = trace.grad_sum_bound;
    const double eta = trace.eta;
    report.eta_l = eta * l;
    if (report.eta_l >= 1.0) {
        throw PreconditionError("check_fa_bound: eta*L = " + std::to_string(report.eta_l) +
                                " is out of regime (needs eta*L < 1)");
    }
    if (l == 0.0) {  // zero gradients: every f_a is zero, ratios all zero
        report.pass = true;
        return report;
    }
    const double el2 = eta * eta * l * l;
    for (std::size_t s = 1; s < trace.f_a.size(); ++s) {
        const double bound = eta * l * l * (1.0 - std::pow(el2, static_cast<double>(s))) / (1.0 - el2);
        const double norm2 = spectral_norm(trace.f_a[s]);
        if (bound == 0.0) {
            if (norm2 > 0.0) report.max_ratio = std::max(report.max_ratio, 1e308);
            continue;
        }
        report.max_ratio = std::max(report.max_ratio, norm2 / bound);
    }
    report.pass = report.max_ratio <= 1.0 + 1e-6;
    return report;
}

RecordedRun make_recorded_run(const LoraPair& init, const FinetuneResult& result, double eta) {
    RecordedRun run;
    run.eta = eta;
    run.a0 = init.a;
    run.b0 = init.b;
    run.b_final = result.pair.b;
    run.gradients = result.trace.applied_gradients();
    return run;
}

double delta_b_relative_error(const RecordedRun& run) {
    require_row_orthonormal(run.a0, 1e-8, "delta_b_relative_error");
    const Matrix actual = run.b_final - run.b0;
    const double scale = frobenius_norm(actual);
    if (scale < 1e-14) throw ZeroUpdate("delta_b_relative_error: total B update is ~0");
    Matrix grad_sum = Matrix::zeros(run.b0.rows, run.a0.cols);
    for (const Matrix& g : run.gradients) grad_sum = grad_sum + g;
    const Matrix approx = (-run.eta) * matmul_nt(grad_sum, run.a0);
    return frobenius_norm(actual - approx) / scale;
}

DeltaBReport check_delta_b_approx(const RecordedRun& run_high, const RecordedRun& run_low) {
    if (run_high.gradients.size() != run_low.gradients.size()) {
        throw PreconditionError("check_delta_b_approx: runs differ in step count");
    }
    if (!bitwise_equal(run_high.a0, run_low.a0) || !bitwise_equal(run_high.b0, run_low.b0)) {
        throw PreconditionError("check_delta_b_approx: runs start from different adapters");
    }
    if (!(run_low.eta < run_high.eta)) {
        throw PreconditionError("check_delta_b_approx: second run must use the smaller eta");
    }
    DeltaBReport report;
    report.rel_err_high = delta_b_relative_error(run_high);
    report.rel_err_low = delta_b_relative_error(run_low);
    report.pass = report.rel_err_low < report.rel_err_high;
    return report;
}

OrthogonalityMeasures orthogonality_measures(const LoraPair& prev, const LoraPair& next) {
    if (!prev.a.same_shape(next.a) || !prev.b.same_shape(next.b)) {
        throw DimensionError("orthogonality_measures: adapter shapes differ");
    }
    OrthogonalityMeasures out;
    out.b_measure = frobenius_norm(matmul_tn(next.b - prev.b, prev.b));
    out.a_measure = frobenius_norm(matmul_nt(prev.a, next.a - prev.a));
    return out;
}

NtkBoundReport verify_ntk_bound(const NtkBoundSpec& spec, const Matrix& delta1, const Matrix& delta2) {
    const int k = spec.output_dim;
    if (k < 1 || spec.grads.size() != static_cast<std::size_t>(k) ||
        spec.base_outputs.size() != static_cast<std::size_t>(k) ||
        spec.target.size() != static_cast<std::size_t>(k)) {
        throw PreconditionError("verify_ntk_bound: spec sizes inconsistent with output_dim");
    }
    if (!delta1.same_shape(delta2)) throw PreconditionError("verify_ntk_bound: delta shapes differ");
    const double slack = 1.0 + 1e-9;
    for (const Matrix& g : spec.grads) {
        if (!g.same_shape(delta1)) throw PreconditionError("verify_ntk_bound: gradient shape differs");
        if (frobenius_norm(g) > spec.grad_bound_r * slack) {
            throw PreconditionError("verify_ntk_bound: a gradient violates |.|_F <= R");
        }
    }
    if (nuclear_norm(delta1) > spec.nuclear_bound_d * slack ||
        nuclear_norm(delta2) > spec.nuclear_bound_d * slack) {
        throw PreconditionError("verify_ntk_bound: a delta violates |.|_* <= D");
    }

    auto predict = [&](const Matrix& d, int j) {
        double inner = 0.0;
        const Matrix& g = spec.grads[static_cast<std::size_t>(j)];
        for (std::size_t idx = 0; idx < g.data.size(); ++idx) inner += g.data[idx] * d.data[idx];
        return spec.base_outputs[static_cast<std::size_t>(j)] + inner;
    };
    auto loss = [&](const Matrix& d) {
        double s = 0.0;
        for (int j = 0; j < k; ++j) {
            const double e = predict(d, j) - spec.target[static_cast<std::size_t>(j)];
            s += e * e;
        }
        return spec.lipschitz_g * std::sqrt(s);
    };

    NtkBoundReport report;
    report.loss_diff = std::abs(loss(delta1) - loss(delta2));

    const Matrix d = delta1 - delta2;
    double pred_gap2 = 0.0;
    double cauchy2 = 0.0;
    const double d_frob2 = frobenius_norm(d) * frobenius_norm(d);
    for (int j = 0; j < k; ++j) {
        const Matrix& g = spec.grads[static_cast<std::size_t>(j)];
        double inner = 0.0;
        for (std::size_t idx = 0; idx < g.data.size(); ++idx) inner += g.data[idx] * d.data[idx];
        pred_gap2 += inner * inner;
        const double gn = frobenius_norm(g);
        cauchy2 += d_frob2 * gn * gn;
    }
    report.bound_lipschitz = spec.lipschitz_g * std::sqrt(pred_gap2);
    report.bound_cauchy = spec.lipschitz_g * std::sqrt(cauchy2);
    report.bound_worst_case =
        2.0 * spec.lipschitz_g * spec.grad_bound_r * spec.nuclear_bound_d * std::sqrt(static_cast<double>(k));

    const double tol = 1e-12 * (1.0 + report.bound_worst_case);
    report.violated = report.loss_diff > report.bound_lipschitz + tol ||
                      report.bound_lipschitz > report.bound_cauchy + tol ||
                      report.bound_cauchy > report.bound_worst_case + tol;
    return report;
}

Matrix similarity_matrix(const std::vector<LoraPair>& adapters, Component component) {
    const std::size_t t = adapters.size();
    if (t == 0) throw DimensionError("similarity_matrix: no adapters");
    for (const LoraPair& p : adapters) {
        if (!p.a.same_shape(adapters.front().a) || !p.b.same_shape(adapters.front().b)) {
            throw DimensionError("similarity_matrix: adapter shapes differ");
        }
    }
    auto pick = [component](const LoraPair& p) -> const Matrix& {
        return component == Component::A ? p.a : p.b;
    };
    Matrix sim(static_cast<int>(t), static_cast<int>(t));
    for (std::size_t i = 0; i < t; ++i) {
        sim(static_cast<int>(i), static_cast<int>(i)) = 1.0;
        for (std::size_t j = i + 1; j < t; ++j) {
            const double c = cosine_similarity_flat(pick(adapters[i]), pick(adapters[j]));
            sim(static_cast<int>(i), static_cast<int>(j)) = c;
            sim(static_cast<int>(j), static_cast<int>(i)) = c;
        }
    }
    return sim;
}

}  // namespace slao
