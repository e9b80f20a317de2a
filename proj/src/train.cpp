// SPDX-License-Identifier: Apache-2.0
#include "slao/train.hpp"

#include <cmath>
#include <string>

#include "slao/decomp.hpp"
#include "slao/errors.hpp"
#include "slao/rng.hpp"

namespace slao {

namespace {

constexpr std::uint64_t kSuiteW0Tag = 0x5EED0;
constexpr std::uint64_t kBatchTag = 0xBA7C4;
constexpr std::uint64_t kTaskSeedTag = 0x7A5C;
constexpr std::uint64_t kInitTag = 0x1417;

SampleBatch take_rows(const TaskSpec& task, int begin, int count) {
    SampleBatch batch;
    batch.inputs = Matrix(count, task.inputs.cols);
    batch.targets = Matrix(count, task.targets.cols);
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < task.inputs.cols; ++j) batch.inputs(i, j) = task.inputs(begin + i, j);
        for (int j = 0; j < task.targets.cols; ++j) batch.targets(i, j) = task.targets(begin + i, j);
    }
    return batch;
}

SampleBatch sample_rows(const TaskSpec& task, int count, rng::Stream& stream) {
    const int limit = task.train_count();
    SampleBatch batch;
    batch.inputs = Matrix(count, task.inputs.cols);
    batch.targets = Matrix(count, task.targets.cols);
    for (int i = 0; i < count; ++i) {
        const int row = static_cast<int>(stream.next_index(static_cast<std::size_t>(limit)));
        for (int j = 0; j < task.inputs.cols; ++j) batch.inputs(i, j) = task.inputs(row, j);
        for (int j = 0; j < task.targets.cols; ++j) batch.targets(i, j) = task.targets(row, j);
    }
    return batch;
}

void check_train_shapes(const Matrix& w0, const LoraPair& pair, const TaskSpec& task) {
    if (pair.b.rows != w0.rows || pair.a.cols != w0.cols || pair.b.cols != pair.a.rows) {
        throw DimensionError("sgd_finetune: adapter shape does not match w0");
    }
    if (task.inputs.cols != w0.cols || task.targets.cols != w0.rows) {
        throw DimensionError("sgd_finetune: task sample shape does not match w0");
    }
}

double mse_on_batch(const Matrix& w_eff, const SampleBatch& batch) {
    const Matrix pred = matmul_nt(batch.inputs, w_eff);
    const Matrix resid = pred - batch.targets;
    double s = 0.0;
    for (double x : resid.data) s += x * x;
    return s / (2.0 * static_cast<double>(batch.inputs.rows));
}

}  // namespace

SampleBatch train_split(const TaskSpec& task) { return take_rows(task, 0, task.train_count()); }

SampleBatch test_split(const TaskSpec& task) {
    return take_rows(task, task.train_count(), task.test_count());
}

std::vector<Matrix> TrainTrace::applied_gradients() const {
    if (snapshot_stride != 1) {
        throw PreconditionError("applied_gradients: trace was not recorded at stride 1");
    }
    std::vector<Matrix> grads;
    grads.reserve(snapshots.size());
    const int total = static_cast<int>(loss.size()) - 1;
    for (const TrainSnapshot& snap : snapshots) {
        if (snap.step < total) grads.push_back(snap.g);
    }
    return grads;
}

std::vector<TaskSpec> generate_task_suite(int num_tasks, int m, int n, int r,
                                          int samples_per_task, double noise_sigma,
                                          std::uint64_t seed) {
    if (num_tasks < 1 || m < 1 || n < 1 || r < 1) {
        throw DimensionError("generate_task_suite: counts must be positive");
    }
    if (r > std::min(m, n)) throw DimensionError("generate_task_suite: rank exceeds min(m, n)");
    if (samples_per_task < 2) throw ValidationError("generate_task_suite: need at least 2 samples per task");
    if (noise_sigma < 0.0) throw ValidationError("generate_task_suite: noise_sigma must be >= 0");

    const Matrix w0 = gaussian_matrix(m, n, 1.0 / std::sqrt(static_cast<double>(n)),
                                      rng::derive(seed, kSuiteW0Tag));
    std::vector<TaskSpec> suite;
    suite.reserve(static_cast<std::size_t>(num_tasks));
    for (int t = 0; t < num_tasks; ++t) {
        const std::uint64_t base = rng::derive(seed, 100 + 4 * static_cast<std::uint64_t>(t));
        TaskSpec task;
        task.task_id = t;
        task.noise_sigma = noise_sigma;
        task.w0 = w0;

        // Teacher: row-orthonormal a*, Gaussian b* scaled to unit spectral norm.
        const Matrix a_raw = gaussian_matrix(r, n, 1.0, rng::derive(base, 0));
        const Matrix a_star = transpose(qr_thin(transpose(a_raw)).q);
        Matrix b_star = gaussian_matrix(m, r, 1.0, rng::derive(base, 1));
        const double top = spectral_norm(b_star);
        if (top == 0.0) throw RankDeficient("generate_task_suite: degenerate teacher");
        b_star = (1.0 / top) * b_star;
        task.teacher_delta = matmul(b_star, a_star);

        task.inputs = gaussian_matrix(samples_per_task, n, 1.0, rng::derive(base, 2));
        const Matrix noise = gaussian_matrix(samples_per_task, m, noise_sigma, rng::derive(base, 3));
        task.targets = matmul_nt(task.inputs, w0 + task.teacher_delta) + noise;
        suite.push_back(std::move(task));
    }
    return suite;
}

LossGrad mse_loss_and_grad(const Matrix& w0, const LoraPair& pair, const SampleBatch& batch) {
    if (pair.b.rows != w0.rows || pair.a.cols != w0.cols || pair.b.cols != pair.a.rows) {
        throw DimensionError("mse_loss_and_grad: adapter shape does not match w0");
    }
    if (batch.inputs.cols != w0.cols || batch.targets.cols != w0.rows ||
        batch.inputs.rows != batch.targets.rows) {
        throw DimensionError("mse_loss_and_grad: batch shape does not match w0");
    }
    if (batch.inputs.rows < 1) throw DimensionError("mse_loss_and_grad: empty batch");

    const int k = batch.inputs.rows;
    const Matrix w_eff = w0 + matmul(pair.b, pair.a);
    const Matrix pred = matmul_nt(batch.inputs, w_eff);  // k x m
    const Matrix resid = pred - batch.targets;

    LossGrad out;
    double s = 0.0;
    for (double x : resid.data) s += x * x;
    out.loss = s / (2.0 * static_cast<double>(k));
    out.g = (1.0 / static_cast<double>(k)) * matmul_tn(resid, batch.inputs);  // m x n
    return out;
}

FinetuneResult sgd_finetune(const Matrix& w0, const LoraPair& init, const TaskSpec& task,
                            const TrainConfig& config) {
    check_train_shapes(w0, init, task);
    if (config.freeze_a && config.freeze_b) {
        throw ValidationError("sgd_finetune: cannot freeze both factors");
    }
    if (!(config.eta > 0.0)) throw ValidationError("sgd_finetune: eta must be > 0");
    if (config.steps < 0) throw ValidationError("sgd_finetune: steps must be >= 0");
    if (config.batch_size < 1) throw ValidationError("sgd_finetune: batch_size must be >= 1");

    const int n_train = task.train_count();
    const int batch_size = std::min(config.batch_size, n_train);
    const bool full_batch = batch_size >= n_train;
    const SampleBatch full = train_split(task);
    rng::Stream batch_rng(rng::derive(config.seed, kBatchTag));

    Matrix a = init.a;
    Matrix b = init.b;
    FinetuneResult result;
    TrainTrace& trace = result.trace;
    trace.snapshot_stride = config.snapshot_stride;

    auto record = [&](int step, double loss, const Matrix& g) {
        trace.loss.push_back(loss);
        trace.grad_norm.push_back(frobenius_norm(g));
        if (!std::isfinite(loss) || loss > kDivergenceThreshold) {
            throw DivergenceError("sgd_finetune: loss " + std::to_string(loss) + " at step " +
                                  std::to_string(step) + " (eta too large)");
        }
        if (config.snapshot_stride > 0 &&
            (step % config.snapshot_stride == 0 || step == config.steps)) {
            trace.snapshots.push_back({step, a, b, g});
        }
    };

    for (int s = 0; s < config.steps; ++s) {
        const SampleBatch batch = full_batch ? full : sample_rows(task, batch_size, batch_rng);
        const LossGrad lg = mse_loss_and_grad(w0, {a, b}, batch);
        record(s, lg.loss, lg.g);
        Matrix new_a = config.freeze_a ? a : a - config.eta * matmul_tn(b, lg.g);
        Matrix new_b = config.freeze_b ? b : b - config.eta * matmul_nt(lg.g, a);
        a = std::move(new_a);
        b = std::move(new_b);
    }
    const LossGrad final_lg = mse_loss_and_grad(w0, {a, b}, full);
    record(config.steps, final_lg.loss, final_lg.g);

    result.pair = {std::move(a), std::move(b)};
    return result;
}

double evaluate(const Matrix& w0, const LoraPair& pair, const TaskSpec& task) {
    return mse_on_batch(w0 + matmul(pair.b, pair.a), test_split(task));
}

double evaluate_delta(const Matrix& w0, const Matrix& delta, const TaskSpec& task) {
    if (!w0.same_shape(delta)) throw DimensionError("evaluate_delta: delta shape differs from w0");
    return mse_on_batch(w0 + delta, test_split(task));
}

std::uint64_t derive_task_seed(std::uint64_t seed, int position) {
    return rng::derive(seed, kTaskSeedTag + static_cast<std::uint64_t>(position));
}

std::uint64_t task_init_seed(std::uint64_t seed, int position) {
    return rng::derive(derive_task_seed(seed, position), kInitTag);
}

ContinualRunOutput continual_run_full(const Matrix& w0, const std::vector<TaskSpec>& tasks,
                                      const InitStrategy& init, MergeStrategy strategy,
                                      const Schedule& schedule, const TrainConfig& config) {
    if (tasks.empty()) throw ValidationError("continual_run: need at least one task");
    const int m = w0.rows;
    const int n = w0.cols;
    const int num_tasks = static_cast<int>(tasks.size());

    TrainConfig base = config;
    base.freeze_a = config.freeze_a || strategy == MergeStrategy::FreaMb;
    base.freeze_b = config.freeze_b || strategy == MergeStrategy::FrebMa;
    if (base.freeze_a && base.freeze_b) {
        throw ValidationError("continual_run: freeze flags conflict with strategy");
    }

    ContinualRunOutput out;
    RunReport& report = out.report;
    report.num_tasks = num_tasks;
    report.meta.strategy = to_string(strategy);
    report.meta.schedule = to_string(schedule);
    report.meta.init = to_string(init);
    report.meta.seed = config.seed;

    MergeState state;
    LoraPair prev_ft;
    for (int pos = 0; pos < num_tasks; ++pos) {
        const TaskSpec& task = tasks[static_cast<std::size_t>(pos)];
        report.meta.task_ids.push_back(task.task_id);

        TrainConfig task_cfg = base;
        task_cfg.seed = derive_task_seed(config.seed, pos);

        // IncLoRA trains each fresh adapter on top of the frozen archive.
        Matrix train_base = w0;
        if (strategy == MergeStrategy::IncLora && pos > 0) {
            train_base = w0 + effective_delta(state, strategy);
        }

        LoraPair start;
        if (pos == 0) {
            start = init_first_task(m, n, config.rank, config.init_sigma,
                                    task_init_seed(config.seed, pos));
        } else {
            switch (init.kind) {
                case InitStrategy::Kind::RandomZero:
                    start = zero_init_from(m, n, config.rank, config.init_sigma,
                                           task_init_seed(config.seed, pos));
                    break;
                case InitStrategy::Kind::LastMerge:
                    start = merge_point_init_from(state);
                    break;
                case InitStrategy::Kind::LastFineTune:
                    start = orthogonal_init_from(prev_ft, init.decomposition);
                    break;
            }
        }

        FinetuneResult ft = sgd_finetune(train_base, start, task, task_cfg);
        report.per_task_ft_loss.push_back(evaluate(train_base, ft.pair, task));

        state = (pos == 0) ? initial_merge_state(ft.pair, strategy)
                           : merge_step(state, ft.pair, pos + 1, strategy, schedule);
        prev_ft = ft.pair;
        out.ft_pairs.push_back(ft.pair);

        const Matrix merged = effective_delta(state, strategy);
        std::vector<double> losses;
        std::vector<double> scores;
        losses.reserve(static_cast<std::size_t>(pos) + 1);
        for (int j = 0; j <= pos; ++j) {
            const double loss = evaluate_delta(w0, merged, tasks[static_cast<std::size_t>(j)]);
            losses.push_back(loss);
            scores.push_back(loss_to_score(loss));
        }
        report.loss_matrix.push_back(std::move(losses));
        report.score_matrix.push_back(std::move(scores));
        out.merged_delta_after.push_back(merged);

        report.per_task_optimal_loss.push_back(evaluate_delta(w0, task.teacher_delta, task));
    }
    out.final_state = std::move(state);
    return out;
}

RunReport continual_run(const Matrix& w0, const std::vector<TaskSpec>& tasks,
                        const InitStrategy& init, MergeStrategy strategy,
                        const Schedule& schedule, const TrainConfig& config) {
    return continual_run_full(w0, tasks, init, strategy, schedule, config).report;
}

}  // namespace slao
