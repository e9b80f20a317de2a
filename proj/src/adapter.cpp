// SPDX-License-Identifier: Apache-2.0
#include "slao/adapter.hpp"

#include "slao/decomp.hpp"
#include "slao/errors.hpp"
#include "slao/merge.hpp"

namespace slao {

namespace {

// Keeps orthogonal_init_from a pure function of its input: the randomized
// decomposition always sketches with this stream.
constexpr std::uint64_t kRsvdInitSeed = 0x51A0u;

void check_adapter_dims(int m, int n, int r) {
    if (m < 1 || n < 1 || r < 1) throw DimensionError("adapter: dimensions must be positive");
    if (r > std::min(m, n)) throw DimensionError("adapter: rank exceeds min(m, n)");
}

}  // namespace

std::string to_string(const InitStrategy& s) {
    switch (s.kind) {
        case InitStrategy::Kind::RandomZero: return "random_zero";
        case InitStrategy::Kind::LastMerge: return "last_merge";
        case InitStrategy::Kind::LastFineTune:
            switch (s.decomposition) {
                case Decomposition::Qr: return "last_finetune";
                case Decomposition::Svd: return "last_finetune_svd";
                case Decomposition::RandomizedSvd: return "last_finetune_rsvd";
            }
    }
    return "unknown";
}

InitStrategy parse_init_strategy(const std::string& name) {
    if (name == "random_zero") return InitStrategy::random_zero();
    if (name == "last_merge") return InitStrategy::last_merge();
    if (name == "last_finetune") return InitStrategy::last_finetune(Decomposition::Qr);
    if (name == "last_finetune_svd") return InitStrategy::last_finetune(Decomposition::Svd);
    if (name == "last_finetune_rsvd") return InitStrategy::last_finetune(Decomposition::RandomizedSvd);
    throw ValidationError("unknown init strategy '" + name + "'");
}

LoraPair init_first_task(int m, int n, int r, double sigma, std::uint64_t seed) {
    check_adapter_dims(m, n, r);
    if (sigma <= 0.0) throw ValidationError("init_first_task: sigma must be > 0");
    LoraPair pair;
    pair.a = gaussian_matrix(r, n, sigma, seed);
    pair.b = Matrix::zeros(m, r);
    return pair;
}

LoraPair orthogonal_init_from(const LoraPair& prev, Decomposition d) {
    const Matrix at = transpose(prev.a);  // n x r
    Matrix q;
    switch (d) {
        case Decomposition::Qr: q = qr_thin(at).q; break;
        case Decomposition::Svd: q = svd_orthogonalize(at); break;
        case Decomposition::RandomizedSvd:
            q = randomized_svd_orthogonalize(at, kRsvdDefaultOversample, kRsvdInitSeed);
            break;
    }
    LoraPair next;
    next.a = transpose(q);  // r x n, orthonormal rows
    next.b = prev.b;
    return next;
}

LoraPair zero_init_from(int m, int n, int r, double sigma, std::uint64_t seed) {
    return init_first_task(m, n, r, sigma, seed);
}

LoraPair merge_point_init_from(const MergeState& state) {
    if (state.tasks_merged < 1) throw EmptyState("merge_point_init_from: no merged task yet");
    LoraPair pair;
    pair.a = state.a_merge;
    pair.b = state.b_merge;
    return pair;
}

Matrix delta(const LoraPair& pair) {
    return matmul(pair.b, pair.a);
}

}  // namespace slao
