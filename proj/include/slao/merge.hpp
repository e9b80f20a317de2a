// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "slao/adapter.hpp"
#include "slao/matrix.hpp"

namespace slao {

// The single running merged adapter plus task counter. `archive` stays empty
// for every strategy except IncLoRA, which appends each fine-tuned adapter;
// that is what makes its memory grow linearly while the others stay at
// (m+n)*r floats.
struct MergeState {
    Matrix a_merge;        // r x n
    Matrix b_merge;        // m x r
    int tasks_merged = 0;  // t
    std::vector<LoraPair> archive;
};

// Time coefficient for merging task i: every schedule returns 1 at i = 1.
struct Schedule {
    enum class Kind { InverseSqrt, Fixed };

    Kind kind = Kind::InverseSqrt;
    double value = 1.0;  // only for Fixed, must lie in (0, 1]

    static Schedule inverse_sqrt() { return {Kind::InverseSqrt, 1.0}; }
    static Schedule fixed(double v);
};

std::string to_string(const Schedule& s);
Schedule parse_schedule(const std::string& name);

enum class MergeStrategy {
    Slao,     // orthogonal init + merge B, carry A from the latest fine-tune
    FtbaMb,   // fine-tune both, merge B, carry A
    FtbaMba,  // fine-tune both, merge both
    FtbaMa,   // fine-tune both, merge A, carry B
    FreaMb,   // freeze A during training, merge B
    FrebMa,   // freeze B during training, merge A
    SeqLora,  // last fine-tune wins, no merge
    IncLora,  // archive one adapter per task, delta is the archived sum
};

std::string to_string(MergeStrategy s);
MergeStrategy parse_merge_strategy(const std::string& name);

/// lambda(schedule, i): 1.0 at i = 1 for every schedule; 1/sqrt(i) or the
/// fixed value for i >= 2. Throws IndexError if i < 1.
double lambda(const Schedule& schedule, int i);

/// State after merging the first fine-tuned adapter (task 1).
MergeState initial_merge_state(const LoraPair& ft, MergeStrategy strategy);

/// One continual-merge update for task i = tasks_merged + 1 (i >= 2).
MergeState merge_step(const MergeState& state, const LoraPair& ft, int i,
                      MergeStrategy strategy, const Schedule& schedule);

/// Unrolls the B-merge recursion: c_t = lambda(t), c_i = lambda(i) *
/// prod_{j=i+1..t} (1 - lambda(j)); the merged B equals sum_i c_i * B_ft_i
/// and the weights sum to 1 whenever lambda(1) = 1.
std::vector<double> closed_form_weights(const Schedule& schedule, int t);

/// Merged weight update used for inference: b_merge * a_merge, or the sum of
/// archived deltas under IncLoRA.
Matrix effective_delta(const MergeState& state, MergeStrategy strategy);

/// Float count a strategy keeps resident when learning T tasks of shape
/// (m, n) at rank r: merged state plus the in-flight fine-tune for the
/// single-adapter strategies, the full archive plus in-flight for IncLoRA.
double memory_footprint(MergeStrategy strategy, int num_tasks, int m, int n, int r);

}  // namespace slao
