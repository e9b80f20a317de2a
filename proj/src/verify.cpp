// SPDX-License-Identifier: Apache-2.0
#include "slao/verify.hpp"

#include <cmath>
#include <sstream>

#include "slao/decomp.hpp"
#include "slao/dynamics.hpp"
#include "slao/errors.hpp"
#include "slao/rng.hpp"
#include "slao/train.hpp"

namespace slao {

namespace {

// Row-orthonormal first-task adapter (b = 0), the initialization the
// dynamics theory assumes.
LoraPair orthonormal_init(int m, int n, int r, std::uint64_t seed) {
    LoraPair raw;
    raw.a = gaussian_matrix(r, n, 1.0, seed);
    raw.b = Matrix::zeros(m, r);
    return orthogonal_init_from(raw, Decomposition::Qr);
}

TrainConfig traced_config(double eta, int steps, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.eta = eta;
    cfg.steps = steps;
    cfg.seed = seed;
    cfg.snapshot_stride = 1;
    return cfg;
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(3);
    out << v;
    return out.str();
}

}  // namespace

std::vector<CheckResult> check_task1_dynamics(int steps, double eta, int m, int n, int r,
                                              std::uint64_t seed) {
    const std::vector<TaskSpec> suite = generate_task_suite(1, m, n, r, 64, 0.0, seed);
    const TaskSpec& task = suite.front();
    const LoraPair init = orthonormal_init(m, n, r, rng::derive(seed, 1));
    const FinetuneResult ft = sgd_finetune(task.w0, init, task, traced_config(eta, steps, seed));

    const std::vector<Matrix> grads = ft.trace.applied_gradients();
    const DynamicsTrace trace = replay_recursions(grads, eta, init.a, init.b);

    double worst = 0.0;
    for (int s = 0; s <= steps; ++s) {
        const TrainSnapshot& snap = ft.trace.snapshots[static_cast<std::size_t>(s)];
        const Matrix a_rec = reconstruct_a(trace, init.a, s);
        const Matrix b_rec = reconstruct_b(trace, init.a, init.b, s);
        const double a_err = frobenius_norm(a_rec - snap.a) / std::max(frobenius_norm(snap.a), 1e-30);
        const double b_scale = std::max(frobenius_norm(snap.b), 1e-30);
        const double b_err = frobenius_norm(b_rec - snap.b) / b_scale;
        worst = std::max(worst, std::max(a_err, s == 0 ? 0.0 : b_err));
    }

    CheckResult exactness;
    exactness.name = "task1-recursion-exactness";
    exactness.pass = worst <= 1e-9;
    exactness.detail = "max relative reconstruction error " + fmt(worst) + " over " +
                       std::to_string(steps) + " steps";

    CheckResult bound;
    bound.name = "fa-spectral-bound";
    try {
        const FaBoundReport report = check_fa_bound(trace);
        bound.pass = report.pass;
        bound.detail = "max |f_A|_2/bound ratio " + fmt(report.max_ratio) + " at eta*L = " +
                       fmt(report.eta_l);
    } catch (const PreconditionError& e) {
        bound.pass = false;
        bound.detail = std::string("out of regime: ") + e.what();
    }
    return {exactness, bound};
}

CheckResult check_delta_b_approximation(int num_seeds, double eta_high, int steps, int m, int n,
                                        int r, std::uint64_t seed) {
    CheckResult result;
    result.name = "delta-b-approximation";
    result.pass = true;
    double worst_high = 0.0, worst_low = 0.0;
    for (int k = 0; k < num_seeds; ++k) {
        const std::uint64_t task_seed = rng::derive(seed, static_cast<std::uint64_t>(k));
        const std::vector<TaskSpec> suite = generate_task_suite(1, m, n, r, 64, 0.0, task_seed);
        const TaskSpec& task = suite.front();
        const LoraPair init = orthonormal_init(m, n, r, rng::derive(task_seed, 2));

        const FinetuneResult high =
            sgd_finetune(task.w0, init, task, traced_config(eta_high, steps, task_seed));
        const FinetuneResult low =
            sgd_finetune(task.w0, init, task, traced_config(eta_high / 10.0, steps, task_seed));
        const DeltaBReport report = check_delta_b_approx(make_recorded_run(init, high, eta_high),
                                                         make_recorded_run(init, low, eta_high / 10.0));
        worst_high = std::max(worst_high, report.rel_err_high);
        worst_low = std::max(worst_low, report.rel_err_low);
        if (!report.pass) result.pass = false;

        if (k == 0) {  // one-step case is exact
            const FinetuneResult one =
                sgd_finetune(task.w0, init, task, traced_config(eta_high, 1, task_seed));
            const double err = delta_b_relative_error(make_recorded_run(init, one, eta_high));
            if (err > 1e-12) {
                result.pass = false;
                result.detail = "S=1 relative error " + fmt(err) + " exceeds 1e-12; ";
            }
        }
    }
    result.detail += "rel err " + fmt(worst_high) + " at eta, " + fmt(worst_low) + " at eta/10, " +
                     std::to_string(num_seeds) + " seeds";
    return result;
}

CheckResult check_update_asymmetry(int num_seeds, int required, double eta, int steps, int m,
                                   int n, int r, std::uint64_t seed) {
    // sigma = 1/sqrt(n) gives E[A0 A0^T] = I_r, the scale the analysis assumes.
    const double sigma = 1.0 / std::sqrt(static_cast<double>(n));
    int hold = 0;
    for (int k = 0; k < num_seeds; ++k) {
        const std::uint64_t chain_seed = rng::derive(seed, static_cast<std::uint64_t>(k));
        const std::vector<TaskSpec> suite = generate_task_suite(2, m, n, r, 64, 0.0, chain_seed);
        TrainConfig cfg;
        cfg.eta = eta;
        cfg.steps = steps;
        cfg.seed = chain_seed;

        // Sequential fine-tuning: task 2 starts from task 1's adapter verbatim.
        const LoraPair init =
            init_first_task(m, n, r, sigma, rng::derive(chain_seed, 3));
        const FinetuneResult ft1 = sgd_finetune(suite[0].w0, init, suite[0], cfg);
        cfg.seed = rng::derive(chain_seed, 4);
        const FinetuneResult ft2 = sgd_finetune(suite[1].w0, ft1.pair, suite[1], cfg);

        const OrthogonalityMeasures measures = orthogonality_measures(ft1.pair, ft2.pair);
        if (measures.b_measure < measures.a_measure) ++hold;
    }
    CheckResult result;
    result.name = "update-asymmetry";
    result.pass = hold >= required;
    result.detail = "|dB^T B| < |A dA^T| on " + std::to_string(hold) + "/" +
                    std::to_string(num_seeds) + " chains (need " + std::to_string(required) + ")";
    return result;
}

CheckResult check_lipschitz_bound(int num_instances, std::uint64_t seed) {
    CheckResult result;
    result.name = "lipschitz-bound";
    result.pass = true;

    // Aligned rank-1 instance: loss difference equals the first two bound levels.
    {
        const int m = 4, n = 4;
        Matrix unit = gaussian_matrix(m, 1, 1.0, rng::derive(seed, 900));
        Matrix row = gaussian_matrix(1, n, 1.0, rng::derive(seed, 901));
        Matrix rank1 = matmul(unit, row);
        rank1 = (1.0 / frobenius_norm(rank1)) * rank1;
        const double c = 0.75;
        NtkBoundSpec spec;
        spec.lipschitz_g = 1.0;
        spec.grad_bound_r = 1.0;
        spec.output_dim = 1;
        spec.nuclear_bound_d = c;
        spec.base_outputs = {5.0};
        spec.target = {0.0};
        spec.grads = {rank1};
        const NtkBoundReport report = verify_ntk_bound(spec, c * rank1, Matrix::zeros(m, n));
        const double gap = std::abs(report.loss_diff - report.bound_lipschitz);
        if (report.violated || gap > 1e-9 || std::abs(report.loss_diff - c) > 1e-9) {
            result.pass = false;
            result.detail = "tight case off by " + fmt(gap) + "; ";
        }
    }

    int violations = 0;
    for (int k = 0; k < num_instances; ++k) {
        const std::uint64_t inst = rng::derive(seed, static_cast<std::uint64_t>(k));
        const int m = 3 + static_cast<int>(rng::at(inst, 0) % 5);
        const int n = 3 + static_cast<int>(rng::at(inst, 1) % 5);
        const int outputs = 1 + static_cast<int>(rng::at(inst, 2) % 4);
        NtkBoundSpec spec;
        spec.lipschitz_g = 0.5 + rng::uniform01(inst, 3);
        spec.grad_bound_r = 2.0;
        spec.output_dim = outputs;
        spec.nuclear_bound_d = 3.0;
        for (int j = 0; j < outputs; ++j) {
            Matrix g = gaussian_matrix(m, n, 1.0, rng::derive(inst, 10 + static_cast<std::uint64_t>(j)));
            const double norm = frobenius_norm(g);
            g = (spec.grad_bound_r * rng::uniform01(inst, 40 + static_cast<std::uint64_t>(j)) / norm) * g;
            spec.grads.push_back(std::move(g));
            spec.base_outputs.push_back(rng::gaussian(inst, 70 + static_cast<std::uint64_t>(j)));
            spec.target.push_back(rng::gaussian(inst, 90 + static_cast<std::uint64_t>(j)));
        }
        auto bounded_delta = [&](std::uint64_t tag) {
            Matrix d = gaussian_matrix(m, n, 1.0, rng::derive(inst, tag));
            const double nuc = nuclear_norm(d);
            return (spec.nuclear_bound_d * rng::uniform01(inst, tag + 1) / nuc) * d;
        };
        const Matrix d1 = bounded_delta(200);
        const Matrix d2 = bounded_delta(300);
        if (verify_ntk_bound(spec, d1, d2).violated) ++violations;
    }
    if (violations > 0) result.pass = false;
    result.detail += std::to_string(violations) + " violations over " +
                     std::to_string(num_instances) + " random instances";
    return result;
}

CheckResult check_component_similarity(int num_tasks, int steps, double eta, int m, int n, int r,
                                       std::uint64_t seed) {
    const double sigma = 1.0 / std::sqrt(static_cast<double>(n));
    const std::vector<TaskSpec> suite = generate_task_suite(num_tasks, m, n, r, 64, 0.0, seed);
    const LoraPair shared_init = init_first_task(m, n, r, sigma, rng::derive(seed, 5));

    std::vector<LoraPair> adapters;
    for (int t = 0; t < num_tasks; ++t) {
        TrainConfig cfg;
        cfg.eta = eta;
        cfg.steps = steps;
        cfg.seed = rng::derive(seed, 100 + static_cast<std::uint64_t>(t));
        adapters.push_back(
            sgd_finetune(suite[static_cast<std::size_t>(t)].w0, shared_init,
                         suite[static_cast<std::size_t>(t)], cfg)
                .pair);
    }
    auto mean_offdiag = [](const Matrix& sim) {
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < sim.rows; ++i) {
            for (int j = 0; j < sim.cols; ++j) {
                if (i == j) continue;
                sum += sim(i, j);
                ++count;
            }
        }
        return sum / count;
    };
    const double mean_a = mean_offdiag(similarity_matrix(adapters, Component::A));
    const double mean_b = mean_offdiag(similarity_matrix(adapters, Component::B));

    CheckResult result;
    result.name = "component-similarity-direction";
    result.pass = mean_a > mean_b;
    result.detail = "mean off-diagonal cosine: A " + fmt(mean_a) + " vs B " + fmt(mean_b);
    return result;
}

std::vector<CheckResult> run_all_checks() {
    std::vector<CheckResult> results = check_task1_dynamics();
    results.push_back(check_delta_b_approximation());
    results.push_back(check_update_asymmetry());
    results.push_back(check_lipschitz_bound());
    results.push_back(check_component_similarity());
    return results;
}

}  // namespace slao
