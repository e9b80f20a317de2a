// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "slao/matrix.hpp"

namespace slao {

struct MergeState;  // merge.hpp

// One low-rank adapter: effective weight update is b * a (m x n), rank <= r.
// No alpha/r output scaling is applied anywhere: the update is plain b*a.
struct LoraPair {
    Matrix a;  // r x n
    Matrix b;  // m x r

    int rank() const { return a.rows; }
};

enum class Decomposition { Qr, Svd, RandomizedSvd };

// How the adapter for task i >= 2 is initialized.
struct InitStrategy {
    enum class Kind { RandomZero, LastMerge, LastFineTune };

    Kind kind = Kind::LastFineTune;
    Decomposition decomposition = Decomposition::Qr;

    static InitStrategy random_zero() { return {Kind::RandomZero, Decomposition::Qr}; }
    static InitStrategy last_merge() { return {Kind::LastMerge, Decomposition::Qr}; }
    static InitStrategy last_finetune(Decomposition d = Decomposition::Qr) {
        return {Kind::LastFineTune, d};
    }
};

std::string to_string(const InitStrategy& s);
InitStrategy parse_init_strategy(const std::string& name);

inline constexpr double kDefaultInitSigma = 0.02;

/// First-task adapter: b all-zero, a ~ N(0, sigma^2), so the initial update
/// b*a is exactly zero.
LoraPair init_first_task(int m, int n, int r, double sigma, std::uint64_t seed);

/// New-task adapter from the previous fine-tune: a becomes Q^T where Q is the
/// chosen orthogonal decomposition of prev.a^T (sign-corrected for QR), so
/// result.a has orthonormal rows spanning the row space of prev.a; b is
/// copied verbatim from prev.b.
LoraPair orthogonal_init_from(const LoraPair& prev, Decomposition d = Decomposition::Qr);

/// Fresh adapter independent of any previous task (same contract as
/// init_first_task).
LoraPair zero_init_from(int m, int n, int r, double sigma, std::uint64_t seed);

/// Copies of the merged components.
LoraPair merge_point_init_from(const MergeState& state);

/// Effective weight update b * a.
Matrix delta(const LoraPair& pair);

}  // namespace slao
