// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "slao/errors.hpp"
#include "slao/metrics.hpp"
#include "slao/rng.hpp"
#include "slao/train.hpp"

using namespace slao;

namespace {

RunReport two_task_report() {
    RunReport report;
    report.num_tasks = 2;
    report.score_matrix = {{0.8}, {0.7, 0.9}};
    report.loss_matrix = {{0.25}, {0.5, 0.1}};
    report.per_task_ft_loss = {0.3, 0.1};
    report.per_task_optimal_loss = {0.05, 0.1};
    return report;
}

}  // namespace

TEST_CASE("average accuracy") {
    RunReport single;
    single.num_tasks = 1;
    single.score_matrix = {{0.9}};
    single.loss_matrix = {{0.1}};
    CHECK(average_accuracy(single) == 0.9);

    CHECK(average_accuracy(two_task_report()) == doctest::Approx(0.8).epsilon(1e-15));

    RunReport constant;
    constant.num_tasks = 3;
    constant.score_matrix = {{0.4}, {0.4, 0.4}, {0.4, 0.4, 0.4}};
    constant.loss_matrix = constant.score_matrix;
    CHECK(average_accuracy(constant) == doctest::Approx(0.4).epsilon(1e-15));

    RunReport incomplete;
    incomplete.num_tasks = 2;
    incomplete.score_matrix = {{0.8}};
    CHECK_THROWS_AS(average_accuracy(incomplete), IncompleteReport);
}

TEST_CASE("backward transfer hand value and undefined case") {
    CHECK(backward_transfer(two_task_report()) == doctest::Approx(-0.1).epsilon(1e-12));

    RunReport preserved;
    preserved.num_tasks = 3;
    preserved.score_matrix = {{0.5}, {0.5, 0.6}, {0.5, 0.6, 0.7}};
    preserved.loss_matrix = preserved.score_matrix;
    CHECK(backward_transfer(preserved) == 0.0);

    RunReport single;
    single.num_tasks = 1;
    single.score_matrix = {{0.9}};
    single.loss_matrix = {{0.1}};
    CHECK_THROWS_AS(backward_transfer(single), UndefinedMetric);
}

TEST_CASE("forgetting error") {
    const RunReport report = two_task_report();
    CHECK(forgetting_error(report, 2) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_THROWS_AS(forgetting_error(report, 1), IndexError);
    CHECK_THROWS_AS(forgetting_error(report, 3), IndexError);

    // Model after t identical to each task's own fine-tune: zero forgetting.
    RunReport same;
    same.num_tasks = 2;
    same.loss_matrix = {{0.3}, {0.3, 0.1}};
    same.score_matrix = {{0.0}, {0.0, 0.0}};
    same.per_task_ft_loss = {0.3, 0.1};
    CHECK(forgetting_error(same, 2) == 0.0);
}

TEST_CASE("intransigence error") {
    RunReport report;
    report.num_tasks = 2;
    report.loss_matrix = {{0.0}, {0.0, 0.0}};
    report.score_matrix = report.loss_matrix;
    report.per_task_ft_loss = {0.4, 0.3};
    report.per_task_optimal_loss = {0.1, 0.3};
    CHECK(intransigence_error(report, 2) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(intransigence_error(report, 1) == doctest::Approx(0.3).epsilon(1e-12));

    report.per_task_optimal_loss.clear();
    CHECK_THROWS_AS(intransigence_error(report, 2), MissingOptimum);
}

TEST_CASE("intransigence is near-nonnegative on noiseless synthetic tasks") {
    const auto suite = generate_task_suite(2, 6, 6, 2, 30, 0.0, 31);
    TrainConfig cfg;
    cfg.steps = 60;
    cfg.rank = 2;
    const RunReport report = continual_run(suite[0].w0, suite, InitStrategy::last_finetune(),
                                           MergeStrategy::Slao, Schedule::inverse_sqrt(), cfg);
    CHECK(intransigence_error(report, 2) >= -1e-9);
}

TEST_CASE("opd hand fixture and properties") {
    const OpdResult hand = opd({{0.8, 0.5}, {0.6, 0.5}});
    CHECK(hand.mopd == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(hand.aopd == doctest::Approx(0.1).epsilon(1e-15));

    const OpdResult zero = opd({{0.7, 0.2}, {0.7, 0.2}});
    CHECK(zero.mopd == 0.0);
    CHECK(zero.aopd == 0.0);

    CHECK_THROWS_AS(opd({{0.8, 0.5}}), NeedTwoOrders);
    CHECK_THROWS_AS(opd({{0.8, 0.5}, {0.6}}), DimensionError);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const int orders = 2 + static_cast<int>(rng::at(seed, 0) % 4);
        const int tasks = 1 + static_cast<int>(rng::at(seed, 1) % 6);
        std::vector<std::vector<double>> perf;
        for (int o = 0; o < orders; ++o) {
            std::vector<double> row;
            for (int t = 0; t < tasks; ++t) {
                row.push_back(rng::uniform01(rng::derive(seed, o), t));
            }
            perf.push_back(std::move(row));
        }
        const OpdResult result = opd(perf);
        CHECK(result.aopd <= result.mopd + 1e-15);
    }
}

TEST_CASE("aa and bwt are invariant under consistent task relabeling") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const int t = 3 + static_cast<int>(rng::at(seed, 0) % 4);
        std::vector<double> diag(t), final_row(t);
        for (int i = 0; i < t; ++i) {
            diag[i] = rng::uniform01(seed, 10 + i);
            final_row[i] = rng::uniform01(seed, 50 + i);
        }
        final_row[t - 1] = diag[t - 1];  // last task's diagonal is its final entry

        auto build = [&](const std::vector<int>& perm) {
            RunReport report;
            report.num_tasks = t;
            for (int row = 0; row < t; ++row) {
                std::vector<double> scores(row + 1, 0.0);
                for (int col = 0; col <= row; ++col) {
                    if (col == row) scores[col] = diag[perm[col]];
                    if (row == t - 1) scores[col] = final_row[perm[col]];
                }
                report.score_matrix.push_back(scores);
                report.loss_matrix.push_back(std::vector<double>(row + 1, 0.0));
            }
            return report;
        };

        std::vector<int> identity(t), shuffled(t);
        for (int i = 0; i < t; ++i) identity[i] = shuffled[i] = i;
        // Fisher-Yates over the already-learned tasks; the final position must
        // stay put so its diagonal entry remains its final-row entry.
        for (int i = t - 2; i > 0; --i) {
            const int j = static_cast<int>(rng::at(seed, 100 + i) % (i + 1));
            std::swap(shuffled[i], shuffled[j]);
        }
        const RunReport a = build(identity);
        const RunReport b = build(shuffled);
        CHECK(average_accuracy(a) == doctest::Approx(average_accuracy(b)).epsilon(1e-12));
        CHECK(backward_transfer(a) == doctest::Approx(backward_transfer(b)).epsilon(1e-12));
    }
}

TEST_CASE("forgetting error matches brute-force re-evaluation") {
    const auto suite = generate_task_suite(3, 6, 6, 2, 30, 0.01, 32);
    TrainConfig cfg;
    cfg.steps = 40;
    cfg.rank = 2;
    const ContinualRunOutput out =
        continual_run_full(suite[0].w0, suite, InitStrategy::last_finetune(), MergeStrategy::Slao,
                           Schedule::inverse_sqrt(), cfg);

    for (int t = 2; t <= 3; ++t) {
        double brute = 0.0;
        for (int i = 0; i < t - 1; ++i) {
            const double after_t =
                evaluate_delta(suite[0].w0, out.merged_delta_after[t - 1], suite[i]);
            const double own = evaluate(suite[0].w0, out.ft_pairs[i], suite[i]);
            brute += after_t - own;
        }
        CHECK(std::abs(forgetting_error(out.report, t) - brute) < 1e-12);
    }
}
