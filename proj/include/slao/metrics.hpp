// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace slao {

struct RunMeta {
    std::string strategy;
    std::string schedule;
    std::string init;
    int order_id = 0;
    std::uint64_t seed = 0;
    std::vector<int> task_ids;  // original task id at each run position
};

// Per-task-per-checkpoint evaluation of one continual run. Row t (0-based)
// holds the merged model's result after learning task t+1, on the test split
// of every task learned so far, both as a raw loss (lower is better) and as
// the bounded score 1/(1+loss) used for accuracy-style metrics.
struct RunReport {
    int num_tasks = 0;
    std::vector<std::vector<double>> loss_matrix;   // row t has t+1 entries
    std::vector<std::vector<double>> score_matrix;  // same shape as loss_matrix
    std::vector<double> per_task_ft_loss;           // each task's own fine-tune, own test split
    std::vector<double> per_task_optimal_loss;      // teacher optimum, own test split
    RunMeta meta;
};

inline double loss_to_score(double loss) { return 1.0 / (1.0 + loss); }

struct OpdResult {
    double mopd = 0.0;
    double aopd = 0.0;
};

/// Mean final-row score (requires the last row complete).
double average_accuracy(const RunReport& report);

/// (1/(T-1)) * sum_{i<T} (a_{i,T} - a_{i,i}); undefined (throws) for T = 1.
double backward_transfer(const RunReport& report);

/// Summed loss increase on tasks 1..t-1 between their own fine-tune and the
/// model after task t (1-based t in [2, T]).
double forgetting_error(const RunReport& report, int t);

/// Summed gap between each task's fine-tune and its teacher optimum, tasks
/// 1..t (1-based t in [1, T]).
double intransigence_error(const RunReport& report, int t);

/// Order-sensitivity: per-task spread of final performance across orders.
/// Input is R orders x T tasks; R >= 2 required.
OpdResult opd(const std::vector<std::vector<double>>& per_order_final_perf);

}  // namespace slao
