// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace slao {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Numerical checks of the factor-dynamics theory, each on deterministic
// seeded synthetic tasks. Parameters default to the full check sizes.

/// With b0 = 0 the replayed recursions must reconstruct the SGD iterates;
/// returns {reconstruction check, spectral-bound check}.
std::vector<CheckResult> check_task1_dynamics(int steps = 200, double eta = 1e-3,
                                              int m = 16, int n = 16, int r = 4,
                                              std::uint64_t seed = 11);

/// delta-B approximation: exact at S = 1, and relative error strictly smaller
/// at eta/10 than at eta on every seeded task.
CheckResult check_delta_b_approximation(int num_seeds = 10, double eta_high = 1e-2,
                                        int steps = 60, int m = 16, int n = 16, int r = 4,
                                        std::uint64_t seed = 23);

/// Sequential fine-tuning asymmetry: |dB^T B| < |A dA^T| on at least
/// `required` of `num_seeds` two-task chains at the given eta. The default
/// step count keeps both fine-tunes inside the small-update regime the
/// linearized analysis assumes.
CheckResult check_update_asymmetry(int num_seeds = 50, int required = 45, double eta = 1e-3,
                                   int steps = 50, int m = 64, int n = 64, int r = 4,
                                   std::uint64_t seed = 37);

/// Lipschitz chain: no violation on random linearized instances, equality on
/// the aligned rank-1 instance.
CheckResult check_lipschitz_bound(int num_instances = 100, std::uint64_t seed = 41);

/// Shared-A-initialization similarity direction: mean off-diagonal cosine
/// similarity of fine-tuned A components exceeds that of B components.
CheckResult check_component_similarity(int num_tasks = 8, int steps = 300, double eta = 1e-3,
                                       int m = 32, int n = 32, int r = 4,
                                       std::uint64_t seed = 53);

std::vector<CheckResult> run_all_checks();

}  // namespace slao
