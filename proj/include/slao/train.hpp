// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "slao/adapter.hpp"
#include "slao/matrix.hpp"
#include "slao/merge.hpp"
#include "slao/metrics.hpp"

namespace slao {

// Synthetic linear-regression task: targets are (w0 + teacher_delta) * x plus
// optional Gaussian noise, with a rank-r teacher shift. The last 20% of the
// samples form the held-out test split.
struct TaskSpec {
    Matrix w0;             // m x n, frozen base weights
    Matrix teacher_delta;  // m x n, rank <= r ground truth b* a*
    Matrix inputs;         // N x n, one sample per row
    Matrix targets;        // N x m
    double noise_sigma = 0.0;
    int task_id = 0;

    int num_samples() const { return inputs.rows; }
    int test_count() const { return num_samples() < 5 ? 1 : num_samples() / 5; }
    int train_count() const { return num_samples() - test_count(); }
};

struct TrainConfig {
    double eta = 1e-3;
    int steps = 500;
    int batch_size = 1 << 30;  // clamped to the train split; default is full batch
    std::uint64_t seed = 0;
    bool freeze_a = false;
    bool freeze_b = false;
    int rank = 8;
    double init_sigma = kDefaultInitSigma;
    int snapshot_stride = 0;  // 0 disables snapshots
};

struct TrainSnapshot {
    int step = 0;  // state before the update at `step`; final entry has step == steps
    Matrix a;
    Matrix b;
    Matrix g;  // gradient evaluated at that state (applied for step < steps)
};

// Per-step record of one fine-tune: entry s holds the loss and gradient norm
// at the state before update s; entry `steps` holds the final state on the
// full train split. Length is always steps + 1.
struct TrainTrace {
    std::vector<double> loss;
    std::vector<double> grad_norm;
    int snapshot_stride = 0;
    std::vector<TrainSnapshot> snapshots;

    /// Gradients actually applied, in step order (requires snapshot_stride 1).
    std::vector<Matrix> applied_gradients() const;
};

struct FinetuneResult {
    LoraPair pair;
    TrainTrace trace;
};

struct SampleBatch {
    Matrix inputs;   // k x n
    Matrix targets;  // k x m
};

SampleBatch train_split(const TaskSpec& task);
SampleBatch test_split(const TaskSpec& task);

/// T tasks sharing one base w0; each teacher is b*_t a*_t with row-orthonormal
/// a*_t and b*_t scaled to unit spectral norm. Deterministic per seed.
std::vector<TaskSpec> generate_task_suite(int num_tasks, int m, int n, int r,
                                          int samples_per_task, double noise_sigma,
                                          std::uint64_t seed);

/// loss = (1/k) sum_j |(w0 + b a) x_j - y_j|^2 / 2 and its gradient in W,
/// g = (1/k) sum_j residual_j x_j^T.
struct LossGrad {
    double loss = 0.0;
    Matrix g;
};
LossGrad mse_loss_and_grad(const Matrix& w0, const LoraPair& pair, const SampleBatch& batch);

/// SGD on the factored update: per step the gradient G is evaluated once and
/// both factors step with it, A <- A - eta B^T G and B <- B - eta G A^T
/// (freeze flags skip the corresponding update). Throws DivergenceError when
/// the loss exceeds 1e12.
FinetuneResult sgd_finetune(const Matrix& w0, const LoraPair& init, const TaskSpec& task,
                            const TrainConfig& config);

/// MSE of w0 + b a on the task's test split.
double evaluate(const Matrix& w0, const LoraPair& pair, const TaskSpec& task);

/// MSE of w0 + delta on the task's test split.
double evaluate_delta(const Matrix& w0, const Matrix& delta, const TaskSpec& task);

/// Seed for the fine-tune at run position `position` (0-based).
std::uint64_t derive_task_seed(std::uint64_t seed, int position);

/// Seed continual_run uses for the adapter initialization at `position`.
std::uint64_t task_init_seed(std::uint64_t seed, int position);

struct ContinualRunOutput {
    RunReport report;
    MergeState final_state;
    std::vector<LoraPair> ft_pairs;            // fine-tuned adapter per position
    std::vector<Matrix> merged_delta_after;    // effective delta after each task
};

/// Full continual-learning loop: first task initialized as standard LoRA,
/// later tasks per `init`; after each fine-tune the merge step runs and the
/// merged model is evaluated on every task seen so far.
ContinualRunOutput continual_run_full(const Matrix& w0, const std::vector<TaskSpec>& tasks,
                                      const InitStrategy& init, MergeStrategy strategy,
                                      const Schedule& schedule, const TrainConfig& config);

RunReport continual_run(const Matrix& w0, const std::vector<TaskSpec>& tasks,
                        const InitStrategy& init, MergeStrategy strategy,
                        const Schedule& schedule, const TrainConfig& config);

inline constexpr double kDivergenceThreshold = 1e12;

}  // namespace slao
