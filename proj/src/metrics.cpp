// SPDX-License-Identifier: Apache-2.0
#include "slao/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "slao/errors.hpp"

namespace slao {

namespace {

void require_complete_final_row(const RunReport& report) {
    const int t = report.num_tasks;
    if (t < 1) throw IncompleteReport("report has no tasks");
    if (report.score_matrix.size() != static_cast<std::size_t>(t) ||
        report.score_matrix.back().size() != static_cast<std::size_t>(t)) {
        throw IncompleteReport("final evaluation row is incomplete");
    }
    for (const auto& row : report.score_matrix) {
        for (double v : row) {
            if (!std::isfinite(v)) throw IncompleteReport("non-finite score entry");
        }
    }
}

}  // namespace

double average_accuracy(const RunReport& report) {
    require_complete_final_row(report);
    const std::vector<double>& last = report.score_matrix.back();
    double sum = 0.0;
    for (double v : last) sum += v;
    return sum / static_cast<double>(last.size());
}

double backward_transfer(const RunReport& report) {
    require_complete_final_row(report);
    const int t = report.num_tasks;
    if (t < 2) throw UndefinedMetric("backward_transfer: undefined for a single task");
    const std::vector<double>& last = report.score_matrix.back();
    double sum = 0.0;
    for (int i = 0; i < t - 1; ++i) {
        sum += last[static_cast<std::size_t>(i)] -
               report.score_matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    }
    return sum / static_cast<double>(t - 1);
}

double forgetting_error(const RunReport& report, int t) {
    if (t < 2 || t > report.num_tasks) throw IndexError("forgetting_error: t must lie in [2, T]");
    const std::vector<double>& row = report.loss_matrix[static_cast<std::size_t>(t) - 1];
    if (row.size() < static_cast<std::size_t>(t) ||
        report.per_task_ft_loss.size() < static_cast<std::size_t>(t)) {
        throw IncompleteReport("forgetting_error: losses not populated through task t");
    }
    double sum = 0.0;
    for (int i = 0; i < t - 1; ++i) {
        sum += row[static_cast<std::size_t>(i)] - report.per_task_ft_loss[static_cast<std::size_t>(i)];
    }
    return sum;
}

double intransigence_error(const RunReport& report, int t) {
    if (t < 1 || t > report.num_tasks) throw IndexError("intransigence_error: t must lie in [1, T]");
    if (report.per_task_optimal_loss.size() < static_cast<std::size_t>(t)) {
        throw MissingOptimum("intransigence_error: teacher optima not recorded");
    }
    if (report.per_task_ft_loss.size() < static_cast<std::size_t>(t)) {
        throw IncompleteReport("intransigence_error: fine-tune losses not populated");
    }
    double sum = 0.0;
    for (int i = 0; i < t; ++i) {
        sum += report.per_task_ft_loss[static_cast<std::size_t>(i)] -
               report.per_task_optimal_loss[static_cast<std::size_t>(i)];
    }
    return sum;
}

OpdResult opd(const std::vector<std::vector<double>>& per_order_final_perf) {
    if (per_order_final_perf.size() < 2) throw NeedTwoOrders("opd: need at least two orders");
    const std::size_t num_tasks = per_order_final_perf.front().size();
    if (num_tasks == 0) throw DimensionError("opd: empty task row");
    for (const auto& row : per_order_final_perf) {
        if (row.size() != num_tasks) throw DimensionError("opd: ragged input");
    }
    OpdResult out;
    double sum = 0.0;
    for (std::size_t t = 0; t < num_tasks; ++t) {
        double lo = per_order_final_perf[0][t];
        double hi = lo;
        for (const auto& row : per_order_final_perf) {
            lo = std::min(lo, row[t]);
            hi = std::max(hi, row[t]);
        }
        const double spread = hi - lo;
        out.mopd = std::max(out.mopd, spread);
        sum += spread;
    }
    out.aopd = sum / static_cast<double>(num_tasks);
    return out;
}

}  // namespace slao
