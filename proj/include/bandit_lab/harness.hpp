#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "bandit_lab/conservative.hpp"
#include "bandit_lab/core_types.hpp"
#include "bandit_lab/env.hpp"
#include "bandit_lab/neural.hpp"

// Experiment runner: executes (algorithm x alpha x step size x seed) grids
// against an environment, derives regret and constraint metrics from the
// logs, and serializes everything needed to reproduce a run.

namespace bandit_lab {

enum class OracleKind { ridge, neural };

// Environment recipe. Seeds stored here act as salts: the effective
// environment seed for a run is mix_seed(run_seed, salt), so each run seed
// is a full independent replicate.
struct EnvSpec {
    bool multiclass = false;
    SyntheticEnvConfig synthetic;  // synthetic.seed is the salt
    std::string dataset_path;
    DatasetSchema schema;
    int multiclass_baseline_arm = 0;
    std::uint64_t shuffle_salt = 0;
};

std::unique_ptr<Environment> build_environment(const EnvSpec& spec, std::uint64_t run_seed);

// One grid cell, fully resolved. algo.horizon mirrors horizon. The neural
// net's input_dim and loss kind are filled in from the environment and the
// algorithm family at run time.
struct RunConfig {
    Algorithm algorithm = Algorithm::c_squarecb;
    EnvSpec env;
    AlgoConfig algo;
    OracleKind oracle = OracleKind::ridge;
    double ridge_lambda = 1.0;
    NetworkConfig net;
    double step_size = 0.01;  // neural OGD step
    std::int64_t horizon = 1000;
    int update_every = 1;
    std::int64_t warmup_baseline_rounds = 0;
};

void validate_run_config(const RunConfig& cfg);

// Side channel kept out of the CSV: the gate's view of each round.
struct StepTrace {
    int candidate_arm = -1;
    double gamma = 0.0;
    bool safety_pass = false;
};

struct RunResult {
    std::vector<RoundLog> logs;
    std::vector<double> cumulative_regret;  // expected chosen minus expected optimal
    std::vector<bool> constraint_ok;        // budget inequality under the true costs
    std::vector<std::int64_t> n_t;          // baseline plays through round t
    std::vector<StepTrace> trace;
};

// Deterministic in (config, seed): one engine drives the run, drawing the
// action uniform then the cost uniform each round, and the oracle is
// flushed every update_every rounds.
RunResult run_single(const RunConfig& cfg, std::uint64_t seed);

// Recompute the per-round constraint flags from logs alone (cumulative
// expected chosen cost vs (1 + alpha) cumulative expected baseline cost,
// strict comparison, no tolerance).
std::vector<bool> recompute_constraint_ok(const std::vector<RoundLog>& logs, double alpha);

// 100 x violating (run, round) pairs / total pairs. Throws on empty input.
double violation_percentage(const std::vector<RunResult>& results);

struct AggregateCurves {
    std::vector<double> mean_regret;
    std::vector<double> stderr_regret;
    std::vector<double> mean_n;
    std::vector<double> stderr_n;
};

// Pointwise mean and standard error across runs; horizons must match.
AggregateCurves aggregate(const std::vector<RunResult>& results);

// Columns: round,mean_regret,stderr_regret,mean_n,stderr_n.
void write_aggregate_csv(std::ostream& out, const AggregateCurves& curves);

// Regret and baseline-count series derived from serialized logs, for
// consumers that only have the CSV.
struct DerivedSeries {
    std::vector<double> cumulative_regret;
    std::vector<std::int64_t> n_t;
};
DerivedSeries derive_series(const std::vector<RoundLog>& logs);

// Rebuild a RunResult (minus the trace) from serialized logs.
RunResult result_from_logs(std::vector<RoundLog> logs, double alpha);

// A config file is flat `key = value` lines with '#' comments. Lists are
// comma separated; seed lists also accept `lo..hi` ranges. Grid axes
// (algorithms, alphas, step sizes, seeds) multiply out into cells.
struct GridConfig {
    RunConfig base;
    std::vector<Algorithm> algorithms;
    std::vector<double> alphas;
    std::vector<double> step_sizes;
    std::vector<std::uint64_t> seeds;
};

GridConfig parse_grid_config(std::istream& in);
GridConfig load_grid_config(const std::string& path);

struct GridCell {
    RunConfig config;
    std::uint64_t seed = 0;
    std::string file_name;
};

// Cells in deterministic order (algorithm, alpha, step size, seed), each
// with a unique file name.
std::vector<GridCell> expand_grid(const GridConfig& grid);

// Every resolved config value plus one `run` line per cell, so results are
// reproducible from the manifest alone.
std::string render_manifest(const GridConfig& grid, const std::vector<GridCell>& cells);

struct ManifestEntry {
    std::string file_name;
    Algorithm algorithm = Algorithm::c_squarecb;
    double alpha = 0.0;
    double step_size = 0.0;
    std::uint64_t seed = 0;
};
std::vector<ManifestEntry> read_manifest(std::istream& in);

// Execute all cells (worker pool of `threads`, or the BANDIT_LAB_THREADS /
// hardware default when 0), write one CSV per cell plus manifest.txt into
// out_dir. Returns the cells executed.
std::vector<GridCell> run_grid(const GridConfig& grid, const std::string& out_dir, int threads = 0);

}  // namespace bandit_lab
