// SPDX-License-Identifier: Apache-2.0
#include "slao/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "slao/checkpoint.hpp"
#include "slao/errors.hpp"
#include "slao/merge.hpp"
#include "slao/metrics.hpp"
#include "slao/rng.hpp"
#include "slao/train.hpp"

namespace slao {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSuiteTag = 0x517E;

struct RunJob {
    MergeStrategy strategy;
    Schedule schedule;
    InitStrategy init;
    int order_id = 0;
    std::vector<int> order;
    std::uint64_t seed = 0;
};

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ':' || c == '/' || c == ' ') c = '-';
    }
    return s;
}

std::string run_id(const RunJob& job) {
    return to_string(job.strategy) + "_" + sanitize(to_string(job.schedule)) + "_" +
           to_string(job.init) + "_o" + std::to_string(job.order_id) + "_s" +
           std::to_string(job.seed);
}

std::string csv_line(const CsvRow& row) {
    std::ostringstream line;
    line << row.strategy << ',' << row.schedule << ',' << row.init << ',' << row.order_id << ','
         << row.seed << ',' << row.after_task << ',' << row.eval_task << ','
         << format_double(row.score) << ',' << format_double(row.loss) << ',' << row.status;
    return line.str();
}

bool row_less(const CsvRow& a, const CsvRow& b) {
    auto key = [](const CsvRow& r) {
        return std::tie(r.strategy, r.schedule, r.init, r.order_id, r.seed, r.after_task,
                        r.eval_task, r.status);
    };
    return key(a) < key(b);
}

int worker_count(std::size_t jobs) {
    std::size_t cap = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("SLAO_WORKERS")) {
        const int v = std::atoi(env);
        if (v >= 1) cap = static_cast<std::size_t>(v);
    }
    return static_cast<int>(std::clamp<std::size_t>(cap, 1, std::max<std::size_t>(jobs, 1)));
}

std::vector<CsvRow> execute_run(const ExperimentConfig& cfg, const RunJob& job,
                                const fs::path& runs_dir) {
    CsvRow base;
    base.strategy = to_string(job.strategy);
    base.schedule = to_string(job.schedule);
    base.init = to_string(job.init);
    base.order_id = job.order_id;
    base.seed = job.seed;

    std::vector<CsvRow> rows;
    try {
        const std::vector<TaskSpec> suite =
            generate_task_suite(cfg.num_tasks, cfg.m, cfg.n, cfg.rank, cfg.samples_per_task,
                                cfg.noise_sigma, rng::derive(job.seed, kSuiteTag));
        std::vector<TaskSpec> ordered;
        ordered.reserve(suite.size());
        for (int idx : job.order) ordered.push_back(suite[static_cast<std::size_t>(idx)]);

        TrainConfig tc;
        tc.eta = cfg.eta;
        tc.steps = cfg.steps;
        tc.batch_size = cfg.batch_size == 0 ? cfg.samples_per_task : cfg.batch_size;
        tc.seed = job.seed;
        tc.rank = cfg.rank;
        tc.init_sigma = cfg.init_sigma;

        const Matrix& w0 = suite.front().w0;
        const ContinualRunOutput out =
            continual_run_full(w0, ordered, job.init, job.strategy, job.schedule, tc);

        for (int t = 0; t < out.report.num_tasks; ++t) {
            for (int j = 0; j <= t; ++j) {
                CsvRow row = base;
                row.after_task = t + 1;
                row.eval_task = out.report.meta.task_ids[static_cast<std::size_t>(j)];
                row.loss = out.report.loss_matrix[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
                row.score = out.report.score_matrix[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
                row.status = "ok";
                rows.push_back(std::move(row));
            }
        }
        CsvRow aa = base;
        aa.after_task = out.report.num_tasks;
        aa.eval_task = -1;
        aa.score = average_accuracy(out.report);
        aa.status = "summary_aa";
        rows.push_back(std::move(aa));
        if (out.report.num_tasks >= 2) {
            CsvRow bwt = base;
            bwt.after_task = out.report.num_tasks;
            bwt.eval_task = -1;
            bwt.score = backward_transfer(out.report);
            bwt.status = "summary_bwt";
            rows.push_back(std::move(bwt));
        }

        const fs::path run_dir = runs_dir / run_id(job);
        const fs::path adapters_dir = run_dir / "adapters";
        fs::create_directories(adapters_dir);

        std::vector<NamedTensor> state_tensors = {{"a_merge", out.final_state.a_merge},
                                                  {"b_merge", out.final_state.b_merge}};
        for (std::size_t k = 0; k < out.final_state.archive.size(); ++k) {
            state_tensors.push_back({"archive" + std::to_string(k) + ".a",
                                     out.final_state.archive[k].a});
            state_tensors.push_back({"archive" + std::to_string(k) + ".b",
                                     out.final_state.archive[k].b});
        }
        save_checkpoint((run_dir / "state.slao").string(), state_tensors);

        for (std::size_t pos = 0; pos < out.ft_pairs.size(); ++pos) {
            char name[32];
            std::snprintf(name, sizeof(name), "ft_task_%03d",
                          out.report.meta.task_ids[pos]);
            save_checkpoint((adapters_dir / (std::string(name) + ".slao")).string(),
                            {{"a", out.ft_pairs[pos].a}, {"b", out.ft_pairs[pos].b}});
        }
    } catch (const Error& e) {
        CsvRow row = base;
        row.status = std::string("error:") + e.kind();
        rows.assign(1, std::move(row));
    } catch (const std::exception&) {
        CsvRow row = base;
        row.status = "error:Error";
        rows.assign(1, std::move(row));
    }
    return rows;
}

struct RunStats {
    int num_tasks = 0;
    std::map<int, int> learned_at;                  // eval_task -> after_task of first appearance
    std::map<std::pair<int, int>, double> scores;   // (after_task, eval_task) -> score
};

struct GroupKey {
    std::string strategy;
    std::string schedule;
    std::string init;
    auto operator<=>(const GroupKey&) const = default;
};

struct ParsedCsv {
    // (group, order, seed) -> per-run eval data
    std::map<GroupKey, std::map<std::pair<int, std::uint64_t>, RunStats>> runs;
};

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

ParsedCsv parse_results(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw IoError("emit_summary: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(file, line)) throw ParseError("emit_summary: empty results file");
    if (line != "strategy,schedule,init,order_id,seed,after_task,eval_task,score,loss,status") {
        throw ParseError("emit_summary: unexpected header");
    }
    ParsedCsv parsed;
    int lineno = 1;
    while (std::getline(file, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::vector<std::string> f = split_fields(line);
        if (f.size() != 10) {
            throw ParseError("emit_summary: line " + std::to_string(lineno) + " has " +
                             std::to_string(f.size()) + " fields");
        }
        if (f[9] != "ok") continue;  // summary/error rows are derived data
        try {
            const GroupKey key{f[0], f[1], f[2]};
            const int order_id = std::stoi(f[3]);
            const std::uint64_t seed = std::stoull(f[4]);
            const int after = std::stoi(f[5]);
            const int eval = std::stoi(f[6]);
            const double score = std::stod(f[7]);
            RunStats& stats = parsed.runs[key][{order_id, seed}];
            stats.num_tasks = std::max(stats.num_tasks, after);
            if (!stats.learned_at.count(eval)) stats.learned_at[eval] = after;
            stats.scores[{after, eval}] = score;
        } catch (const std::exception&) {
            throw ParseError("emit_summary: malformed line " + std::to_string(lineno));
        }
    }
    return parsed;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string run_sweep(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const fs::path out_dir(cfg.output_dir);
    const fs::path runs_dir = out_dir / "runs";
    fs::create_directories(runs_dir);

    std::vector<RunJob> jobs;
    for (const std::string& strategy : cfg.strategies) {
        for (const std::string& schedule : cfg.schedules) {
            for (const std::string& init : cfg.init_strategies) {
                for (std::size_t o = 0; o < cfg.orders.size(); ++o) {
                    for (std::uint64_t seed : cfg.seeds) {
                        jobs.push_back({parse_merge_strategy(strategy), parse_schedule(schedule),
                                        parse_init_strategy(init), static_cast<int>(o),
                                        cfg.orders[o], seed});
                    }
                }
            }
        }
    }

    std::vector<std::vector<CsvRow>> per_job(jobs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= jobs.size()) break;
            per_job[idx] = execute_run(cfg, jobs[idx], runs_dir);
        }
    };
    const int workers = worker_count(jobs.size());
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
    }

    std::vector<CsvRow> rows;
    for (const auto& chunk : per_job) rows.insert(rows.end(), chunk.begin(), chunk.end());
    std::sort(rows.begin(), rows.end(), row_less);

    const fs::path csv_path = out_dir / "results.csv";
    std::ofstream file(csv_path, std::ios::trunc);
    if (!file) throw IoError("run_sweep: cannot open '" + csv_path.string() + "' for writing");
    file << "strategy,schedule,init,order_id,seed,after_task,eval_task,score,loss,status\n";
    for (const CsvRow& row : rows) file << csv_line(row) << "\n";
    if (!file) throw IoError("run_sweep: write failed");
    return csv_path.string();
}

std::string emit_summary(const std::string& results_csv, std::ostream& table) {
    const ParsedCsv parsed = parse_results(results_csv);

    struct GroupSummary {
        int runs = 0;
        double aa_sum = 0.0;
        int bwt_count = 0;
        double bwt_sum = 0.0;
        bool has_opd = false;
        OpdResult opd_result;
    };
    std::map<GroupKey, GroupSummary> summaries;

    for (const auto& [key, run_map] : parsed.runs) {
        GroupSummary& agg = summaries[key];
        // per order: task -> (sum of final scores over seeds, count)
        std::map<int, std::map<int, std::pair<double, int>>> per_order;
        for (const auto& [ident, stats] : run_map) {
            agg.runs += 1;
            const int t_total = stats.num_tasks;
            double aa = 0.0;
            int count = 0;
            for (const auto& [when, score] : stats.scores) {
                if (when.first != t_total) continue;
                aa += score;
                ++count;
                auto& cell = per_order[ident.first][when.second];
                cell.first += score;
                cell.second += 1;
            }
            if (count == 0) throw ParseError("emit_summary: run missing final-row scores");
            agg.aa_sum += aa / count;
            if (t_total >= 2) {
                double bwt = 0.0;
                for (const auto& [task, when] : stats.learned_at) {
                    if (when == t_total) continue;
                    bwt += stats.scores.at({t_total, task}) - stats.scores.at({when, task});
                }
                agg.bwt_sum += bwt / (t_total - 1);
                agg.bwt_count += 1;
            }
        }
        if (per_order.size() >= 2) {
            std::set<int> task_ids;
            for (const auto& [order, cells] : per_order) {
                for (const auto& [task, cell] : cells) task_ids.insert(task);
            }
            std::vector<std::vector<double>> perf;
            for (const auto& [order, cells] : per_order) {
                std::vector<double> row;
                for (int task : task_ids) {
                    const auto it = cells.find(task);
                    if (it == cells.end()) {
                        throw ParseError("emit_summary: task " + std::to_string(task) +
                                         " missing from order " + std::to_string(order));
                    }
                    row.push_back(it->second.first / it->second.second);
                }
                perf.push_back(std::move(row));
            }
            agg.opd_result = opd(perf);
            agg.has_opd = true;
        }
    }

    const fs::path summary_path = fs::path(results_csv).parent_path() / "summary.csv";
    std::ofstream file(summary_path, std::ios::trunc);
    if (!file) throw IoError("emit_summary: cannot open '" + summary_path.string() + "'");
    file << "strategy,schedule,init,runs,mean_aa,mean_bwt,mopd,aopd\n";
    table << "strategy        schedule        init               runs  mean_aa    mean_bwt   mopd       aopd\n";
    for (const auto& [key, agg] : summaries) {
        const std::string aa = format_double(agg.aa_sum / agg.runs);
        const std::string bwt = agg.bwt_count > 0 ? format_double(agg.bwt_sum / agg.bwt_count) : "";
        const std::string mopd = agg.has_opd ? format_double(agg.opd_result.mopd) : "";
        const std::string aopd = agg.has_opd ? format_double(agg.opd_result.aopd) : "";
        file << key.strategy << ',' << key.schedule << ',' << key.init << ',' << agg.runs << ','
             << aa << ',' << bwt << ',' << mopd << ',' << aopd << "\n";
        char line[256];
        std::snprintf(line, sizeof(line), "%-15s %-15s %-18s %-5d %-10.4g %-10.4g %-10.4g %-10.4g\n",
                      key.strategy.c_str(), key.schedule.c_str(), key.init.c_str(), agg.runs,
                      agg.aa_sum / agg.runs, agg.bwt_count > 0 ? agg.bwt_sum / agg.bwt_count : 0.0,
                      agg.has_opd ? agg.opd_result.mopd : 0.0,
                      agg.has_opd ? agg.opd_result.aopd : 0.0);
        table << line;
    }
    if (!file) throw IoError("emit_summary: write failed");
    return summary_path.string();
}

void emit_similarity(const std::string& adapters_dir, Component component, std::ostream& out) {
    std::vector<fs::path> files;
    if (!fs::is_directory(adapters_dir)) {
        throw IoError("emit_similarity: '" + adapters_dir + "' is not a directory");
    }
    for (const auto& entry : fs::directory_iterator(adapters_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".slao") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.size() < 2) {
        throw ValidationError("emit_similarity: need at least 2 checkpoints, found " +
                              std::to_string(files.size()));
    }

    std::vector<LoraPair> adapters;
    for (const fs::path& path : files) {
        LoraPair pair;
        bool have_a = false, have_b = false;
        for (NamedTensor& t : load_checkpoint(path.string())) {
            if (t.name == "a") {
                pair.a = std::move(t.value);
                have_a = true;
            } else if (t.name == "b") {
                pair.b = std::move(t.value);
                have_b = true;
            }
        }
        if (!have_a || !have_b) {
            throw FormatError("emit_similarity: '" + path.string() + "' lacks tensors 'a'/'b'");
        }
        if (!adapters.empty() && (!pair.a.same_shape(adapters.front().a) ||
                                  !pair.b.same_shape(adapters.front().b))) {
            throw ShapeMismatch("emit_similarity: '" + path.string() + "' shape differs");
        }
        adapters.push_back(std::move(pair));
    }

    const Matrix sim = similarity_matrix(adapters, component);
    for (int i = 0; i < sim.rows; ++i) {
        for (int j = 0; j < sim.cols; ++j) {
            if (j > 0) out << ',';
            out << format_double(sim(i, j));
        }
        out << "\n";
    }
}

void emit_memory_table(const ExperimentConfig& cfg, std::ostream& out) {
    validate_config(cfg);
    out << "strategy,num_tasks,floats\n";
    std::vector<std::string> names = cfg.strategies;
    std::sort(names.begin(), names.end());
    for (const std::string& name : names) {
        const MergeStrategy strategy = parse_merge_strategy(name);
        for (int t = 1; t <= cfg.num_tasks; ++t) {
            out << name << ',' << t << ','
                << format_double(memory_footprint(strategy, t, cfg.m, cfg.n, cfg.rank)) << "\n";
        }
    }
}

}  // namespace slao
