// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace slao {

// Experiment grid: one continual run per (strategy, schedule, init, order,
// seed) tuple. See README for the JSON schema; dims and num_tasks are the
// only required fields.
struct ExperimentConfig {
    int m = 0;
    int n = 0;
    int rank = 8;
    int num_tasks = 0;
    int samples_per_task = 64;
    double noise_sigma = 0.01;

    double eta = 1e-3;
    int steps = 500;
    int batch_size = 0;  // 0 means full batch
    double init_sigma = 0.02;

    std::vector<std::string> strategies = {"slao"};
    std::vector<std::string> schedules = {"inverse_sqrt"};
    std::vector<std::string> init_strategies = {"last_finetune"};
    std::vector<std::vector<int>> orders;  // defaults to the identity order
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::string output_dir = "slao_out";

    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates a config file. Missing optional fields take the
/// defaults above; `orders` defaults to [0..T-1]. Throws ParseError with the
/// offending line for malformed JSON, ValidationError naming the violated
/// invariant otherwise.
ExperimentConfig load_config(const std::string& path);

void save_config(const std::string& path, const ExperimentConfig& config);

void validate_config(const ExperimentConfig& config);

}  // namespace slao
