// SPDX-License-Identifier: Apache-2.0
#include "slao/config.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "slao/adapter.hpp"
#include "slao/errors.hpp"
#include "slao/merge.hpp"

namespace slao {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ValidationError("unknown field '" + it.key() + "' in " + where);
        }
    }
}

int line_of_offset(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') ++line;
    }
    return line;
}

template <typename T>
T field_or(const json& obj, const char* name, T fallback) {
    if (!obj.contains(name)) return fallback;
    try {
        return obj.at(name).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("field '") + name + "' has the wrong type");
    }
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw IoError("load_config: cannot open '" + path + "'");
    const std::string text((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("load_config: invalid JSON at line " +
                         std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
    }
    if (!root.is_object()) throw ParseError("load_config: top level must be an object");
    reject_unknown_keys(root, {"dims", "num_tasks", "samples_per_task", "noise_sigma", "train",
                               "strategies", "schedules", "init_strategies", "orders", "seeds",
                               "output_dir"},
                        "config");

    ExperimentConfig cfg;
    if (!root.contains("dims")) throw ValidationError("missing required field 'dims'");
    const json& dims = root.at("dims");
    reject_unknown_keys(dims, {"m", "n", "rank"}, "dims");
    if (!dims.contains("m") || !dims.contains("n")) {
        throw ValidationError("'dims' must provide both 'm' and 'n'");
    }
    cfg.m = field_or<int>(dims, "m", 0);
    cfg.n = field_or<int>(dims, "n", 0);
    cfg.rank = field_or<int>(dims, "rank", cfg.rank);

    if (!root.contains("num_tasks")) throw ValidationError("missing required field 'num_tasks'");
    cfg.num_tasks = field_or<int>(root, "num_tasks", 0);
    cfg.samples_per_task = field_or<int>(root, "samples_per_task", cfg.samples_per_task);
    cfg.noise_sigma = field_or<double>(root, "noise_sigma", cfg.noise_sigma);

    if (root.contains("train")) {
        const json& train = root.at("train");
        reject_unknown_keys(train, {"eta", "steps", "batch_size", "init_sigma"}, "train");
        cfg.eta = field_or<double>(train, "eta", cfg.eta);
        cfg.steps = field_or<int>(train, "steps", cfg.steps);
        cfg.batch_size = field_or<int>(train, "batch_size", cfg.batch_size);
        cfg.init_sigma = field_or<double>(train, "init_sigma", cfg.init_sigma);
    }

    cfg.strategies = field_or<std::vector<std::string>>(root, "strategies", cfg.strategies);
    cfg.schedules = field_or<std::vector<std::string>>(root, "schedules", cfg.schedules);
    cfg.init_strategies = field_or<std::vector<std::string>>(root, "init_strategies", cfg.init_strategies);
    cfg.orders = field_or<std::vector<std::vector<int>>>(root, "orders", cfg.orders);
    cfg.seeds = field_or<std::vector<std::uint64_t>>(root, "seeds", cfg.seeds);
    cfg.output_dir = field_or<std::string>(root, "output_dir", cfg.output_dir);

    if (cfg.orders.empty()) {
        std::vector<int> identity(static_cast<std::size_t>(std::max(cfg.num_tasks, 0)));
        for (int i = 0; i < cfg.num_tasks; ++i) identity[static_cast<std::size_t>(i)] = i;
        cfg.orders.push_back(std::move(identity));
    }
    validate_config(cfg);
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.m < 1 || cfg.n < 1) throw ValidationError("dims.m and dims.n must be >= 1");
    if (cfg.rank < 1 || cfg.rank > std::min(cfg.m, cfg.n)) {
        throw ValidationError("dims.rank must lie in [1, min(m, n)]");
    }
    if (cfg.num_tasks < 1) throw ValidationError("num_tasks must be >= 1");
    if (cfg.samples_per_task < 2) throw ValidationError("samples_per_task must be >= 2");
    if (cfg.noise_sigma < 0.0) throw ValidationError("noise_sigma must be >= 0");
    if (!(cfg.eta > 0.0)) throw ValidationError("train.eta must be > 0");
    if (cfg.steps < 0) throw ValidationError("train.steps must be >= 0");
    if (cfg.batch_size < 0) throw ValidationError("train.batch_size must be >= 0 (0 = full batch)");
    if (!(cfg.init_sigma > 0.0)) throw ValidationError("train.init_sigma must be > 0");
    if (cfg.strategies.empty()) throw ValidationError("strategies must be non-empty");
    if (cfg.schedules.empty()) throw ValidationError("schedules must be non-empty");
    if (cfg.init_strategies.empty()) throw ValidationError("init_strategies must be non-empty");
    if (cfg.orders.empty()) throw ValidationError("orders must be non-empty");
    if (cfg.seeds.empty()) throw ValidationError("seeds must be non-empty");
    if (cfg.output_dir.empty()) throw ValidationError("output_dir must be non-empty");

    for (const std::string& s : cfg.strategies) parse_merge_strategy(s);
    for (const std::string& s : cfg.schedules) parse_schedule(s);
    for (const std::string& s : cfg.init_strategies) parse_init_strategy(s);
    for (const std::vector<int>& order : cfg.orders) {
        if (order.size() != static_cast<std::size_t>(cfg.num_tasks)) {
            throw ValidationError("order is not a permutation of 0..T-1 (wrong length)");
        }
        std::vector<bool> seen(order.size(), false);
        for (int v : order) {
            if (v < 0 || v >= cfg.num_tasks || seen[static_cast<std::size_t>(v)]) {
                throw ValidationError("order is not a permutation of 0..T-1");
            }
            seen[static_cast<std::size_t>(v)] = true;
        }
    }
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
    json root;
    root["dims"] = {{"m", cfg.m}, {"n", cfg.n}, {"rank", cfg.rank}};
    root["num_tasks"] = cfg.num_tasks;
    root["samples_per_task"] = cfg.samples_per_task;
    root["noise_sigma"] = cfg.noise_sigma;
    root["train"] = {{"eta", cfg.eta},
                     {"steps", cfg.steps},
                     {"batch_size", cfg.batch_size},
                     {"init_sigma", cfg.init_sigma}};
    root["strategies"] = cfg.strategies;
    root["schedules"] = cfg.schedules;
    root["init_strategies"] = cfg.init_strategies;
    root["orders"] = cfg.orders;
    root["seeds"] = cfg.seeds;
    root["output_dir"] = cfg.output_dir;

    std::ofstream file(path, std::ios::trunc);
    if (!file) throw IoError("save_config: cannot open '" + path + "' for writing");
    file << root.dump(2) << "\n";
    if (!file) throw IoError("save_config: write to '" + path + "' failed");
}

}  // namespace slao
