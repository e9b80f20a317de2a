// SPDX-License-Identifier: Apache-2.0
#include "slao/merge.hpp"

#include <cmath>
#include <cstdio>

#include "slao/errors.hpp"

namespace slao {

namespace {

void require_matching_shapes(const MergeState& state, const LoraPair& ft) {
    if (!state.a_merge.same_shape(ft.a) || !state.b_merge.same_shape(ft.b)) {
        throw DimensionError("merge_step: fine-tuned adapter shape differs from merge state");
    }
}

// acc <- acc + lam * (fresh - acc), elementwise; a fixed point when fresh == acc.
void ema_update(Matrix& acc, const Matrix& fresh, double lam) {
    for (std::size_t k = 0; k < acc.data.size(); ++k) {
        acc.data[k] += lam * (fresh.data[k] - acc.data[k]);
    }
}

}  // namespace

Schedule Schedule::fixed(double v) {
    if (!(v > 0.0 && v <= 1.0)) throw ValidationError("Schedule::fixed: value must lie in (0, 1]");
    return {Kind::Fixed, v};
}

std::string to_string(const Schedule& s) {
    if (s.kind == Schedule::Kind::InverseSqrt) return "inverse_sqrt";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fixed:%g", s.value);
    return buf;
}

Schedule parse_schedule(const std::string& name) {
    if (name == "inverse_sqrt") return Schedule::inverse_sqrt();
    const std::string prefix = "fixed:";
    if (name.rfind(prefix, 0) == 0) {
        try {
            return Schedule::fixed(std::stod(name.substr(prefix.size())));
        } catch (const std::invalid_argument&) {
            throw ValidationError("bad fixed schedule '" + name + "'");
        }
    }
    throw ValidationError("unknown schedule '" + name + "'");
}

std::string to_string(MergeStrategy s) {
    switch (s) {
        case MergeStrategy::Slao: return "slao";
        case MergeStrategy::FtbaMb: return "ftba_mb";
        case MergeStrategy::FtbaMba: return "ftba_mba";
        case MergeStrategy::FtbaMa: return "ftba_ma";
        case MergeStrategy::FreaMb: return "frea_mb";
        case MergeStrategy::FrebMa: return "freb_ma";
        case MergeStrategy::SeqLora: return "seqlora";
        case MergeStrategy::IncLora: return "inclora";
    }
    return "unknown";
}

MergeStrategy parse_merge_strategy(const std::string& name) {
    if (name == "slao") return MergeStrategy::Slao;
    if (name == "ftba_mb") return MergeStrategy::FtbaMb;
    if (name == "ftba_mba") return MergeStrategy::FtbaMba;
    if (name == "ftba_ma") return MergeStrategy::FtbaMa;
    if (name == "frea_mb") return MergeStrategy::FreaMb;
    if (name == "freb_ma") return MergeStrategy::FrebMa;
    if (name == "seqlora") return MergeStrategy::SeqLora;
    if (name == "inclora") return MergeStrategy::IncLora;
    throw ValidationError("unknown merge strategy '" + name + "'");
}

double lambda(const Schedule& schedule, int i) {
    if (i < 1) throw IndexError("lambda: task index must be >= 1");
    if (i == 1) return 1.0;
    switch (schedule.kind) {
        case Schedule::Kind::InverseSqrt: return 1.0 / std::sqrt(static_cast<double>(i));
        case Schedule::Kind::Fixed: return schedule.value;
    }
    return 1.0;
}

MergeState initial_merge_state(const LoraPair& ft, MergeStrategy strategy) {
    MergeState state;
    state.a_merge = ft.a;
    state.b_merge = ft.b;
    state.tasks_merged = 1;
    if (strategy == MergeStrategy::IncLora) state.archive.push_back(ft);
    return state;
}

MergeState merge_step(const MergeState& state, const LoraPair& ft, int i,
                      MergeStrategy strategy, const Schedule& schedule) {
    require_matching_shapes(state, ft);
    if (i < 2) throw SequenceError("merge_step: task index must be >= 2");
    if (i != state.tasks_merged + 1) {
        throw SequenceError("merge_step: expected task index " + std::to_string(state.tasks_merged + 1) +
                            ", got " + std::to_string(i));
    }
    const double lam = lambda(schedule, i);
    MergeState next = state;
    switch (strategy) {
        case MergeStrategy::Slao:
        case MergeStrategy::FtbaMb:
        case MergeStrategy::FreaMb:
            next.a_merge = ft.a;
            ema_update(next.b_merge, ft.b, lam);
            break;
        case MergeStrategy::FtbaMba:
            ema_update(next.a_merge, ft.a, lam);
            ema_update(next.b_merge, ft.b, lam);
            break;
        case MergeStrategy::FtbaMa:
        case MergeStrategy::FrebMa:
            ema_update(next.a_merge, ft.a, lam);
            next.b_merge = ft.b;
            break;
        case MergeStrategy::SeqLora:
            next.a_merge = ft.a;
            next.b_merge = ft.b;
            break;
        case MergeStrategy::IncLora:
            next.a_merge = ft.a;
            next.b_merge = ft.b;
            next.archive.push_back(ft);
            break;
    }
    next.tasks_merged = i;
    return next;
}

std::vector<double> closed_form_weights(const Schedule& schedule, int t) {
    if (t < 1) throw IndexError("closed_form_weights: t must be >= 1");
    std::vector<double> c(static_cast<std::size_t>(t), 0.0);
    double suffix = 1.0;  // prod_{j=i+1..t} (1 - lambda(j))
    for (int i = t; i >= 1; --i) {
        const double lam = lambda(schedule, i);
        c[static_cast<std::size_t>(i) - 1] = lam * suffix;
        suffix *= (1.0 - lam);
    }
    return c;
}

Matrix effective_delta(const MergeState& state, MergeStrategy strategy) {
    if (state.tasks_merged < 1) throw EmptyState("effective_delta: no merged task yet");
    if (strategy == MergeStrategy::IncLora) {
        if (state.archive.empty()) throw EmptyState("effective_delta: IncLoRA archive is empty");
        Matrix sum = delta(state.archive.front());
        for (std::size_t k = 1; k < state.archive.size(); ++k) {
            sum = sum + delta(state.archive[k]);
        }
        return sum;
    }
    return matmul(state.b_merge, state.a_merge);
}

double memory_footprint(MergeStrategy strategy, int num_tasks, int m, int n, int r) {
    if (num_tasks < 1 || m < 1 || n < 1 || r < 1) {
        throw ValidationError("memory_footprint: all arguments must be positive");
    }
    const double adapter = static_cast<double>(m + n) * r;
    if (strategy == MergeStrategy::IncLora) {
        return static_cast<double>(num_tasks) * adapter + adapter;
    }
    return 2.0 * adapter;  // merged state + in-flight fine-tune
}

}  // namespace slao
