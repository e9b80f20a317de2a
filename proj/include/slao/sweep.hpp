// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "slao/config.hpp"
#include "slao/dynamics.hpp"

namespace slao {

// One results.csv line. Eval rows carry status "ok"; per-run aggregates use
// status "summary_aa" / "summary_bwt" with the value in the score column;
// a failed run yields a single row with status "error:<Kind>".
struct CsvRow {
    std::string strategy;
    std::string schedule;
    std::string init;
    int order_id = 0;
    std::uint64_t seed = 0;
    int after_task = 0;
    int eval_task = 0;
    double score = 0.0;
    double loss = 0.0;
    std::string status;
};

std::string format_double(double v);  // 17 significant digits, locale-free

/// Executes the full grid (strategy x schedule x init x order x seed), one
/// continual run each, writing results.csv plus per-run checkpoints under
/// <output_dir>/runs/<run_id>/. Rows are sorted before writing so the file is
/// byte-identical across reruns and worker counts. SLAO_WORKERS overrides the
/// worker count. Returns the results.csv path. A failed run is recorded in
/// its status row and does not abort the sweep.
std::string run_sweep(const ExperimentConfig& config);

/// Aggregates a results.csv per (strategy, schedule, init): mean AA and BWT
/// over seeds and orders, MOPD/AOPD across orders (blank with fewer than two
/// orders). Writes summary.csv next to the input and a text table to `table`.
/// Returns the summary.csv path.
std::string emit_summary(const std::string& results_csv, std::ostream& table);

/// Cosine-similarity matrix of the adapters stored as <dir>/*.slao (each file
/// needs tensors "a" and "b"), written as a bare CSV matrix.
void emit_similarity(const std::string& adapters_dir, Component component, std::ostream& out);

/// Parameter counts per strategy for T = 1..num_tasks, as CSV.
void emit_memory_table(const ExperimentConfig& config, std::ostream& out);

}  // namespace slao
