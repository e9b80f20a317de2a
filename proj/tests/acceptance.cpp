// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// fails. Each criterion pins its own tolerances; see README for the list.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slao/checkpoint.hpp"
#include "slao/config.hpp"
#include "slao/decomp.hpp"
#include "slao/dynamics.hpp"
#include "slao/errors.hpp"
#include "slao/merge.hpp"
#include "slao/metrics.hpp"
#include "slao/rng.hpp"
#include "slao/sweep.hpp"
#include "slao/train.hpp"
#include "slao/verify.hpp"

using namespace slao;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(int id, const std::string& name, bool pass, const std::string& detail,
               double elapsed_ms) {
    std::printf("[%s] criterion %2d: %-34s %s (%.0f ms)\n", pass ? "PASS" : "FAIL", id,
                name.c_str(), detail.c_str(), elapsed_ms);
    if (!pass) ++g_failures;
}

template <typename Fn>
void timed(int id, const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        std::tie(pass, detail) = fn();
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    criterion(id, name, pass, detail, ms);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

double max_gram_deviation_rows(const Matrix& a) {  // |a a^T - I|_max
    const Matrix gram = matmul_nt(a, a);
    double dev = 0.0;
    for (int i = 0; i < gram.rows; ++i)
        for (int j = 0; j < gram.cols; ++j)
            dev = std::max(dev, std::abs(gram(i, j) - (i == j ? 1.0 : 0.0)));
    return dev;
}

// --- criterion 1: orthogonal initialization invariant ---
std::pair<bool, std::string> c1_orthogonal_init() {
    const std::vector<std::pair<int, int>> shapes = {{2, 8}, {4, 16}, {8, 64}};
    double worst = 0.0;
    int count = 0;
    for (std::size_t shape_idx = 0; shape_idx < shapes.size(); ++shape_idx) {
        const auto [r, n] = shapes[shape_idx];
        for (int k = 0; k < 100; ++k) {
            LoraPair prev;
            const std::uint64_t seed = rng::derive(1000 + shape_idx, static_cast<std::uint64_t>(k));
            prev.a = gaussian_matrix(r, n, 1.0, seed);
            prev.b = gaussian_matrix(n, r, 1.0, rng::derive(seed, 1));
            const LoraPair next = orthogonal_init_from(prev);
            worst = std::max(worst, max_gram_deviation_rows(next.a));
            ++count;
        }
    }
    return {worst <= 1e-10,
            "max |A0 A0^T - I| = " + fmt(worst) + " over " + std::to_string(count) + " adapters"};
}

// --- criterion 2: QR contract ---
std::pair<bool, std::string> c2_qr_contract() {
    double worst_recon = 0.0, worst_diag = 0.0;
    bool unique = true;
    for (int k = 0; k < 200; ++k) {
        const std::uint64_t seed = rng::derive(2000, static_cast<std::uint64_t>(k));
        const int cols = 1 + static_cast<int>(rng::at(seed, 0) % 12);
        const int rows = cols + static_cast<int>(rng::at(seed, 1) % 24);
        const Matrix m = gaussian_matrix(rows, cols, 1.0, rng::derive(seed, 2));
        const QrResult qr = qr_thin(m);
        const double recon =
            frobenius_norm(matmul(qr.q, qr.r_factor) - m) / frobenius_norm(m);
        worst_recon = std::max(worst_recon, recon);
        for (int d = 0; d < cols; ++d) worst_diag = std::min(qr.r_factor(d, d), worst_diag);
        const QrResult again = qr_thin(m);
        unique = unique && bitwise_equal(qr.q, again.q) && bitwise_equal(qr.r_factor, again.r_factor);
    }
    const bool pass = worst_recon <= 1e-10 && worst_diag >= 0.0 && unique;
    return {pass, "max reconstruction " + fmt(worst_recon) + ", min diag " + fmt(worst_diag) +
                      (unique ? ", bitwise unique" : ", NOT unique")};
}

// --- criterion 3: merge closed form ---
std::pair<bool, std::string> c3_merge_closed_form() {
    // Hand-derived t=3 weights for the inverse-sqrt schedule.
    const std::vector<double> w3 = closed_form_weights(Schedule::inverse_sqrt(), 3);
    const double hand[3] = {0.123789, 0.298858, 0.577350};
    for (int i = 0; i < 3; ++i) {
        if (std::abs(w3[static_cast<std::size_t>(i)] - hand[i]) > 1e-5) {
            return {false, "t=3 hand weights mismatch"};
        }
    }

    double worst = 0.0, worst_sum = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::uint64_t seed = rng::derive(3000, static_cast<std::uint64_t>(trial));
        const int t = 2 + static_cast<int>(rng::at(seed, 0) % 19);
        const Schedule sched = (trial % 2 == 0)
                                   ? Schedule::inverse_sqrt()
                                   : Schedule::fixed(0.05 + 0.95 * rng::uniform01(seed, 1));
        std::vector<LoraPair> fts;
        for (int i = 0; i < t; ++i) {
            LoraPair p;
            p.a = gaussian_matrix(2, 4, 1.0, rng::derive(seed, 10 + i));
            p.b = gaussian_matrix(3, 2, 1.0, rng::derive(seed, 50 + i));
            fts.push_back(std::move(p));
        }
        MergeState state = initial_merge_state(fts[0], MergeStrategy::Slao);
        for (int i = 2; i <= t; ++i) {
            state = merge_step(state, fts[static_cast<std::size_t>(i) - 1], i, MergeStrategy::Slao, sched);
        }
        const std::vector<double> c = closed_form_weights(sched, t);
        Matrix expected = Matrix::zeros(3, 2);
        double sum = 0.0;
        for (int i = 0; i < t; ++i) {
            expected = expected + (c[static_cast<std::size_t>(i)] * fts[static_cast<std::size_t>(i)].b);
            sum += c[static_cast<std::size_t>(i)];
        }
        worst = std::max(worst, frobenius_norm(state.b_merge - expected) /
                                    std::max(frobenius_norm(expected), 1e-30));
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
    return {worst <= 1e-10 && worst_sum <= 1e-10,
            "max recursion/closed-form gap " + fmt(worst) + ", max |sum(c)-1| = " + fmt(worst_sum)};
}

// --- criterion 4: lambda schedule values ---
std::pair<bool, std::string> c4_lambda_values() {
    const Schedule inv = Schedule::inverse_sqrt();
    const double e1 = std::abs(lambda(inv, 1) - 1.0);
    const double e4 = std::abs(lambda(inv, 4) - 0.5);
    const double e2 = std::abs(lambda(inv, 2) - 1.0 / std::sqrt(2.0));
    const bool pass = e1 <= 1e-12 && e4 <= 1e-12 && e2 <= 1e-12;
    return {pass, "lambda(1)=" + fmt(lambda(inv, 1)) + ", lambda(2)=" + fmt(lambda(inv, 2)) +
                      ", lambda(4)=" + fmt(lambda(inv, 4))};
}

// --- criterion 5: gradient oracle ---
std::pair<bool, std::string> c5_gradient_oracle() {
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const std::uint64_t seed = rng::derive(5000, static_cast<std::uint64_t>(k));
        const int m = 1 + static_cast<int>(rng::at(seed, 0) % 6);
        const int n = 1 + static_cast<int>(rng::at(seed, 1) % 6);
        const int r = 1 + static_cast<int>(rng::at(seed, 2) % std::min(m, n));
        const int rows = 1 + static_cast<int>(rng::at(seed, 3) % 4);
        const Matrix w0 = gaussian_matrix(m, n, 1.0, rng::derive(seed, 4));
        LoraPair pair;
        pair.a = gaussian_matrix(r, n, 1.0, rng::derive(seed, 5));
        pair.b = gaussian_matrix(m, r, 1.0, rng::derive(seed, 6));
        SampleBatch batch;
        batch.inputs = gaussian_matrix(rows, n, 1.0, rng::derive(seed, 7));
        batch.targets = gaussian_matrix(rows, m, 1.0, rng::derive(seed, 8));

        const Matrix analytic = mse_loss_and_grad(w0, pair, batch).g;
        Matrix fd(m, n);
        const double h = 1e-5;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                Matrix up = w0, down = w0;
                up(i, j) += h;
                down(i, j) -= h;
                fd(i, j) = (mse_loss_and_grad(up, pair, batch).loss -
                            mse_loss_and_grad(down, pair, batch).loss) /
                           (2.0 * h);
            }
        }
        worst = std::max(worst, frobenius_norm(analytic - fd) / frobenius_norm(fd));
    }
    return {worst <= 1e-6, "max relative gap vs central differences " + fmt(worst)};
}

// --- criteria 6-9, 13: dynamics checks with spec parameters ---
std::pair<bool, std::string> from_checks(const std::vector<CheckResult>& results) {
    bool pass = true;
    std::string detail;
    for (const CheckResult& r : results) {
        pass = pass && r.pass;
        if (!detail.empty()) detail += "; ";
        detail += r.detail;
    }
    return {pass, detail};
}

// --- criterion 10: trend reproduction ---
std::pair<bool, std::string> c10_trend() {
    const int num_tasks = 6, m = 32, n = 32, r = 4;
    const int samples = 64, steps = 600;
    const double eta = 0.01, noise = 0.01;
    const double init_sigma = 1.0 / std::sqrt(static_cast<double>(n));
    const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    const std::vector<std::vector<int>> orders = {{0, 1, 2, 3, 4, 5}, {5, 3, 1, 4, 0, 2}};

    struct Arm {
        MergeStrategy strategy;
        InitStrategy init;
        double aa_sum = 0.0;
        double bwt_sum = 0.0;
        int runs = 0;
    };
    std::vector<Arm> arms = {
        {MergeStrategy::Slao, InitStrategy::last_finetune()},
        {MergeStrategy::SeqLora, InitStrategy::last_merge()},
        {MergeStrategy::FtbaMb, InitStrategy::last_merge()},
        {MergeStrategy::FtbaMa, InitStrategy::last_merge()},
    };

    for (std::uint64_t seed : seeds) {
        const std::vector<TaskSpec> suite =
            generate_task_suite(num_tasks, m, n, r, samples, noise, rng::derive(seed, 0x517E));
        for (const std::vector<int>& order : orders) {
            std::vector<TaskSpec> ordered;
            for (int idx : order) ordered.push_back(suite[static_cast<std::size_t>(idx)]);
            TrainConfig cfg;
            cfg.eta = eta;
            cfg.steps = steps;
            cfg.seed = seed;
            cfg.rank = r;
            cfg.init_sigma = init_sigma;
            for (Arm& arm : arms) {
                const RunReport report =
                    continual_run(suite[0].w0, ordered, arm.init, arm.strategy,
                                  Schedule::inverse_sqrt(), cfg);
                arm.aa_sum += average_accuracy(report);
                arm.bwt_sum += backward_transfer(report);
                arm.runs += 1;
            }
        }
    }
    const double aa_slao = arms[0].aa_sum / arms[0].runs;
    const double aa_seq = arms[1].aa_sum / arms[1].runs;
    const double aa_mb = arms[2].aa_sum / arms[2].runs;
    const double aa_ma = arms[3].aa_sum / arms[3].runs;
    const double bwt_slao = arms[0].bwt_sum / arms[0].runs;
    const double bwt_seq = arms[1].bwt_sum / arms[1].runs;

    const bool pass = aa_slao > aa_seq && bwt_slao > bwt_seq && aa_mb >= aa_ma - 0.01;
    return {pass, "AA slao " + fmt(aa_slao) + " vs seqlora " + fmt(aa_seq) + "; BWT " +
                      fmt(bwt_slao) + " vs " + fmt(bwt_seq) + "; AA ftba_mb " + fmt(aa_mb) +
                      " vs ftba_ma " + fmt(aa_ma)};
}

// --- criterion 11: memory accounting ---
std::pair<bool, std::string> c11_memory(const fs::path& tmp) {
    bool pass = memory_footprint(MergeStrategy::Slao, 10, 64, 64, 8) ==
                memory_footprint(MergeStrategy::Slao, 1000, 64, 64, 8);
    for (int t = 1; t <= 6 && pass; ++t) {
        const double diff = memory_footprint(MergeStrategy::IncLora, t + 1, 64, 64, 8) -
                            memory_footprint(MergeStrategy::IncLora, t, 64, 64, 8);
        pass = pass && diff == (64.0 + 64.0) * 8.0;
    }

    // Serialized SLAO merge state: byte length must not depend on T.
    auto state_size = [&](int num_tasks, MergeStrategy strategy, const std::string& name) {
        const std::vector<TaskSpec> suite = generate_task_suite(num_tasks, 8, 8, 2, 20, 0.0, 71);
        TrainConfig cfg;
        cfg.steps = 10;
        cfg.rank = 2;
        const InitStrategy init = strategy == MergeStrategy::IncLora
                                      ? InitStrategy::random_zero()
                                      : InitStrategy::last_finetune();
        const ContinualRunOutput out = continual_run_full(
            suite[0].w0, suite, init, strategy, Schedule::inverse_sqrt(), cfg);
        std::vector<NamedTensor> tensors = {{"a_merge", out.final_state.a_merge},
                                            {"b_merge", out.final_state.b_merge}};
        for (std::size_t k = 0; k < out.final_state.archive.size(); ++k) {
            tensors.push_back({"archive" + std::to_string(k) + ".a", out.final_state.archive[k].a});
            tensors.push_back({"archive" + std::to_string(k) + ".b", out.final_state.archive[k].b});
        }
        const fs::path file = tmp / name;
        save_checkpoint(file.string(), tensors);
        return fs::file_size(file);
    };
    const auto slao2 = state_size(2, MergeStrategy::Slao, "slao_t2.slao");
    const auto slao20 = state_size(20, MergeStrategy::Slao, "slao_t20.slao");
    const auto inc2 = state_size(2, MergeStrategy::IncLora, "inc_t2.slao");
    const auto inc4 = state_size(4, MergeStrategy::IncLora, "inc_t4.slao");
    pass = pass && slao2 == slao20 && inc4 > inc2;
    return {pass, "slao state bytes " + std::to_string(slao2) + " (T=2) vs " +
                      std::to_string(slao20) + " (T=20); inclora " + std::to_string(inc2) +
                      " -> " + std::to_string(inc4)};
}

// --- criterion 12: metrics hand fixtures ---
std::pair<bool, std::string> c12_metric_fixtures() {
    RunReport report;
    report.num_tasks = 2;
    report.score_matrix = {{0.8}, {0.7, 0.9}};
    report.loss_matrix = {{0.25}, {0.5, 0.1}};
    report.per_task_ft_loss = {0.3, 0.1};
    report.per_task_optimal_loss = {0.05, 0.1};

    RunReport intrans;
    intrans.num_tasks = 2;
    intrans.score_matrix = {{0.0}, {0.0, 0.0}};
    intrans.loss_matrix = {{0.0}, {0.0, 0.0}};
    intrans.per_task_ft_loss = {0.4, 0.3};
    intrans.per_task_optimal_loss = {0.1, 0.3};

    const OpdResult hand = opd({{0.8, 0.5}, {0.6, 0.5}});
    const bool pass = std::abs(backward_transfer(report) + 0.1) <= 1e-12 &&
                      std::abs(average_accuracy(report) - 0.8) <= 1e-12 &&
                      std::abs(forgetting_error(report, 2) - 0.2) <= 1e-12 &&
                      std::abs(intransigence_error(intrans, 2) - 0.3) <= 1e-12 &&
                      std::abs(hand.mopd - 0.2) <= 1e-12 && std::abs(hand.aopd - 0.1) <= 1e-12;
    return {pass, "BWT/AA/F2/I2/MOPD/AOPD all reproduced at 1e-12"};
}

// --- criterion 14: pipeline determinism and persistence ---
std::pair<bool, std::string> c14_pipeline(const fs::path& tmp) {
    ExperimentConfig cfg;
    cfg.m = 8;
    cfg.n = 8;
    cfg.rank = 2;
    cfg.num_tasks = 2;
    cfg.samples_per_task = 20;
    cfg.noise_sigma = 0.0;
    cfg.eta = 0.01;
    cfg.steps = 20;
    cfg.seeds = {1, 2};
    cfg.orders = {{0, 1}};
    cfg.strategies = {"slao", "seqlora"};

    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    cfg.output_dir = (tmp / "sweep_a").string();
    const std::string first = slurp(run_sweep(cfg));
    cfg.output_dir = (tmp / "sweep_b").string();
    const std::string second = slurp(run_sweep(cfg));
    bool pass = !first.empty() && first == second;
    std::string detail = pass ? "results.csv byte-identical across reruns" : "csv mismatch";

    // Checkpoint round trip.
    const fs::path ckpt = tmp / "roundtrip.slao";
    const std::vector<NamedTensor> tensors = {{"a", gaussian_matrix(4, 6, 1.0, 90)},
                                              {"b", gaussian_matrix(6, 4, 1.0, 91)}};
    save_checkpoint(ckpt.string(), tensors);
    const std::vector<NamedTensor> loaded = load_checkpoint(ckpt.string());
    pass = pass && loaded.size() == 2 && bitwise_equal(loaded[0].value, tensors[0].value) &&
           bitwise_equal(loaded[1].value, tensors[1].value);

    // Truncation and bad magic.
    std::string bytes = slurp(ckpt.string());
    {
        std::ofstream out(tmp / "trunc.slao", std::ios::binary);
        out << bytes.substr(0, bytes.size() - 5);
    }
    bool truncated_rejected = false;
    try {
        load_checkpoint((tmp / "trunc.slao").string());
    } catch (const CorruptionError&) {
        truncated_rejected = true;
    }
    {
        bytes[0] = 'X';
        std::ofstream out(tmp / "magic.slao", std::ios::binary);
        out << bytes;
    }
    bool magic_rejected = false;
    try {
        load_checkpoint((tmp / "magic.slao").string());
    } catch (const FormatError&) {
        magic_rejected = true;
    }
    pass = pass && truncated_rejected && magic_rejected;
    if (pass) detail += "; round trip bitwise; corrupt files rejected";
    return {pass, detail};
}

}  // namespace

int main() {
    const fs::path tmp =
        fs::temp_directory_path() / ("slao_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    timed(1, "orthogonal-init-invariant", c1_orthogonal_init);
    timed(2, "qr-contract", c2_qr_contract);
    timed(3, "merge-closed-form", c3_merge_closed_form);
    timed(4, "lambda-schedule-values", c4_lambda_values);
    timed(5, "gradient-oracle", c5_gradient_oracle);
    timed(6, "theorem1-task1-dynamics", [] { return from_checks(check_task1_dynamics(200)); });
    timed(7, "delta-b-approximation", [] {
        return from_checks({check_delta_b_approximation(10)});
    });
    timed(8, "eq12-13-inequality", [] { return from_checks({check_update_asymmetry(50, 45)}); });
    timed(9, "lemma1-bound", [] { return from_checks({check_lipschitz_bound(100)}); });
    timed(10, "trend-reproduction", c10_trend);
    timed(11, "memory-accounting", [&] { return c11_memory(tmp); });
    timed(12, "metrics-hand-fixtures", c12_metric_fixtures);
    timed(13, "asymmetry-observation", [] {
        return from_checks({check_component_similarity(8, 300)});
    });
    timed(14, "pipeline-determinism", [&] { return c14_pipeline(tmp); });

    fs::remove_all(tmp);
    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all 14 criteria passed\n");
    return 0;
}
