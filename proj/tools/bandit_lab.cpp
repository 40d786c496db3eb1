#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "bandit_lab/harness.hpp"

namespace {

using namespace bandit_lab;

std::vector<ManifestEntry> load_manifest(const std::string& dir) {
    const std::filesystem::path path = std::filesystem::path(dir) / "manifest.txt";
    std::ifstream in(path);
    if (!in) throw std::runtime_error("no manifest.txt in '" + dir + "'");
    std::vector<ManifestEntry> entries = read_manifest(in);
    if (entries.empty()) throw std::runtime_error("manifest in '" + dir + "' lists no runs");
    return entries;
}

std::vector<RoundLog> load_run(const std::string& dir, const std::string& file_name) {
    const std::filesystem::path path = std::filesystem::path(dir) / file_name;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open run log '" + path.string() + "'");
    int num_arms = 0;
    return read_round_logs_csv(in, num_arms);
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int threads) {
    const GridConfig grid = load_grid_config(config_path);
    const std::vector<GridCell> cells = run_grid(grid, out_dir, threads);
    std::cout << "wrote " << cells.size() << " run(s) + manifest.txt to " << out_dir << "\n";
    return 0;
}

int cmd_aggregate(const std::string& in_dir, const std::string& out_path,
                  const std::string& match) {
    const std::vector<ManifestEntry> entries = load_manifest(in_dir);
    std::vector<RunResult> results;
    for (const auto& entry : entries) {
        if (!match.empty() && entry.file_name.find(match) == std::string::npos) continue;
        results.push_back(result_from_logs(load_run(in_dir, entry.file_name), entry.alpha));
    }
    if (results.empty())
        throw std::runtime_error("no runs in '" + in_dir + "' match '" + match + "'");
    const AggregateCurves curves = aggregate(results);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    write_aggregate_csv(out, curves);
    std::cout << "aggregated " << results.size() << " run(s) into " << out_path << "\n";
    return 0;
}

int cmd_compare(const std::string& in_dir) {
    const std::vector<ManifestEntry> entries = load_manifest(in_dir);

    // Group runs by grid point; seeds within a point are replicates.
    using Key = std::tuple<std::string, double, double>;
    std::map<Key, std::vector<RunResult>> groups;
    for (const auto& entry : entries) {
        Key key{algorithm_name(entry.algorithm), entry.alpha, entry.step_size};
        groups[key].push_back(result_from_logs(load_run(in_dir, entry.file_name), entry.alpha));
    }

    std::printf("%-18s %8s %10s %14s %12s %12s\n", "algorithm", "alpha", "step_size",
                "final_regret", "violation_%", "mean_n_T");
    for (const auto& [key, results] : groups) {
        double regret = 0.0, n_final = 0.0;
        for (const auto& r : results) {
            regret += r.cumulative_regret.empty() ? 0.0 : r.cumulative_regret.back();
            n_final += r.n_t.empty() ? 0.0 : static_cast<double>(r.n_t.back());
        }
        const double runs = static_cast<double>(results.size());
        std::printf("%-18s %8g %10g %14.4f %12.4f %12.1f\n", std::get<0>(key).c_str(),
                    std::get<1>(key), std::get<2>(key), regret / runs,
                    violation_percentage(results), n_final / runs);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conservative contextual bandit experiment runner"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "runs", in_dir, out_path, match;
    int threads = 0;

    auto* run = app.add_subcommand("run", "Execute a config grid and write per-run CSV logs");
    run->add_option("--config", config_path, "Grid config file")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--threads", threads, "Worker count (0 = BANDIT_LAB_THREADS or hardware)");

    auto* agg = app.add_subcommand("aggregate", "Write mean/stderr curves for a run directory");
    agg->add_option("--in", in_dir, "Run directory with manifest.txt")->required();
    agg->add_option("--out", out_path, "Output CSV path")->required();
    agg->add_option("--match", match, "Only aggregate runs whose file name contains this");

    auto* cmp = app.add_subcommand("compare", "Print a summary table per grid point");
    cmp->add_option("--in", in_dir, "Run directory with manifest.txt")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, threads);
        if (agg->parsed()) return cmd_aggregate(in_dir, out_path, match);
        return cmd_compare(in_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
