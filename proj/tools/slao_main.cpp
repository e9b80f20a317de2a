// SPDX-License-Identifier: Apache-2.0
//
// slao — continual LoRA merging experiments on synthetic linear tasks.
//
// Subcommands:
//   slao run <config.json>                 execute the sweep grid, write results.csv
//   slao summary <results.csv>             aggregate AA/BWT/MOPD/AOPD per strategy
//   slao similarity <dir> --component A|B  cosine-similarity CSV of stored adapters
//   slao verify                            run the dynamics check suite
//   slao mem-table <config.json>           parameter counts per strategy per T
//
// SLAO_WORKERS overrides the sweep worker count. Exit codes: 0 success,
// 1 validation/config error, 2 runtime failure (including failed checks).

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "slao/config.hpp"
#include "slao/errors.hpp"
#include "slao/sweep.hpp"
#include "slao/verify.hpp"

namespace {

int dispatch(const std::string& command, const std::string& path, const std::string& component) {
    using namespace slao;
    if (command == "run") {
        const ExperimentConfig cfg = load_config(path);
        const std::string csv = run_sweep(cfg);
        std::cout << csv << "\n";
        return 0;
    }
    if (command == "summary") {
        const std::string summary = emit_summary(path, std::cout);
        std::cout << "summary written to " << summary << "\n";
        return 0;
    }
    if (command == "similarity") {
        if (component != "A" && component != "B") {
            throw ValidationError("--component must be A or B");
        }
        emit_similarity(path, component == "A" ? Component::A : Component::B, std::cout);
        return 0;
    }
    if (command == "mem-table") {
        const ExperimentConfig cfg = load_config(path);
        emit_memory_table(cfg, std::cout);
        return 0;
    }
    if (command == "verify") {
        bool all_pass = true;
        for (const CheckResult& result : run_all_checks()) {
            std::printf("[%s] %s: %s\n", result.pass ? "PASS" : "FAIL", result.name.c_str(),
                        result.detail.c_str());
            all_pass = all_pass && result.pass;
        }
        return all_pass ? 0 : 2;
    }
    throw ValidationError("unknown command '" + command + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continual LoRA merging experiments on synthetic linear tasks"};
    app.require_subcommand(1);

    std::string config_path, results_path, adapters_dir, mem_config_path;
    std::string component = "A";

    CLI::App* run = app.add_subcommand("run", "execute a sweep from a JSON config");
    run->add_option("config", config_path, "config JSON path")->required();

    CLI::App* summary = app.add_subcommand("summary", "aggregate a results.csv");
    summary->add_option("results", results_path, "results.csv path")->required();

    CLI::App* similarity = app.add_subcommand("similarity", "adapter cosine-similarity matrix");
    similarity->add_option("dir", adapters_dir, "directory of .slao adapter checkpoints")->required();
    similarity->add_option("--component", component, "A or B (default A)");

    app.add_subcommand("verify", "run the dynamics check suite");

    CLI::App* mem = app.add_subcommand("mem-table", "parameter counts per strategy per T");
    mem->add_option("config", mem_config_path, "config JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage problems are validation errors; --help is success
    }

    try {
        if (run->parsed()) return dispatch("run", config_path, "");
        if (summary->parsed()) return dispatch("summary", results_path, "");
        if (similarity->parsed()) return dispatch("similarity", adapters_dir, component);
        if (mem->parsed()) return dispatch("mem-table", mem_config_path, "");
        return dispatch("verify", "", "");
    } catch (const slao::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const slao::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const slao::Error& e) {
        std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
