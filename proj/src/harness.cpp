#include "bandit_lab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bandit_lab/oracle.hpp"
#include "bandit_lab/rng.hpp"

namespace bandit_lab {

std::unique_ptr<Environment> build_environment(const EnvSpec& spec, std::uint64_t run_seed) {
    if (spec.multiclass) {
        MulticlassDataset ds = load_dataset(spec.dataset_path, spec.schema);
        return make_multiclass_env(std::move(ds), spec.multiclass_baseline_arm,
                                   mix_seed(run_seed, spec.shuffle_salt));
    }
    SyntheticEnvConfig cfg = spec.synthetic;
    cfg.seed = mix_seed(run_seed, spec.synthetic.seed);
    return make_synthetic_env(cfg);
}

void validate_run_config(const RunConfig& cfg) {
    AlgoConfig algo = cfg.algo;
    algo.horizon = cfg.horizon;
    validate_algo_config(algo);
    if (cfg.horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
    if (cfg.update_every < 1) throw std::invalid_argument("update_every must be positive");
    if (cfg.warmup_baseline_rounds < 0) throw std::invalid_argument("warmup must be nonnegative");
    if (!(std::isfinite(cfg.step_size) && cfg.step_size > 0.0))
        throw std::invalid_argument("step size must be positive");
    if (!(std::isfinite(cfg.ridge_lambda) && cfg.ridge_lambda > 0.0))
        throw std::invalid_argument("ridge lambda must be positive");
    if (cfg.env.multiclass && cfg.env.dataset_path.empty())
        throw std::invalid_argument("multiclass environment needs a dataset path");
}

RunResult run_single(const RunConfig& cfg, std::uint64_t seed) {
    validate_run_config(cfg);
    const std::unique_ptr<Environment> env = build_environment(cfg.env, seed);
    const int num_arms = env->num_arms();
    const int dim = env->context_dim();

    AlgoConfig algo_cfg = cfg.algo;
    algo_cfg.horizon = cfg.horizon;

    const bool needs_oracle =
        cfg.algorithm == Algorithm::c_squarecb || cfg.algorithm == Algorithm::c_fastcb ||
        cfg.algorithm == Algorithm::vanilla_squarecb || cfg.algorithm == Algorithm::vanilla_fastcb;
    const bool fast_family =
        cfg.algorithm == Algorithm::c_fastcb || cfg.algorithm == Algorithm::vanilla_fastcb;

    std::unique_ptr<RegressionOracle> base_oracle;
    std::unique_ptr<BufferedOracle> buffered;
    if (needs_oracle) {
        if (cfg.oracle == OracleKind::ridge) {
            base_oracle = std::make_unique<RidgeOracle>(dim, cfg.ridge_lambda);
        } else {
            NetworkConfig net = cfg.net;
            net.input_dim = dim;
            net.loss_kind = fast_family ? LossKind::kl : LossKind::square;
            base_oracle = std::make_unique<NeuralOracle>(net, mix_seed(seed, 101), cfg.step_size);
        }
        buffered = std::make_unique<BufferedOracle>(*base_oracle);
    }

    const std::unique_ptr<Policy> policy = make_policy(
        cfg.algorithm, algo_cfg, buffered.get(), num_arms, dim, cfg.warmup_baseline_rounds);

    RunResult result;
    result.logs.reserve(cfg.horizon);
    std::mt19937_64 eng(mix_seed(seed, 7));
    double cum_chosen = 0.0, cum_baseline = 0.0, cum_optimal = 0.0;
    std::int64_t baseline_plays = 0;

    for (std::int64_t t = 1; t <= cfg.horizon; ++t) {
        const double action_draw = uniform01(eng);
        const double noise_draw = uniform01(eng);

        RoundInputs inputs;
        inputs.contexts = env->contexts(t);
        inputs.expected_costs = env->expected_costs(t);
        inputs.sampled_costs.resize(num_arms);
        for (int a = 0; a < num_arms; ++a)
            inputs.sampled_costs[a] = env->sample_cost(t, a, noise_draw);
        inputs.baseline_arm = env->baseline_arm(t);

        StepOutcome out;
        try {
            out = policy->step(t, inputs, action_draw);
        } catch (const std::exception& e) {
            throw std::runtime_error("round " + std::to_string(t) + ": " + e.what());
        }

        cum_chosen += out.log.expected_cost_chosen;
        cum_baseline += out.log.baseline_expected_cost;
        cum_optimal += out.log.expected_cost_optimal;
        if (out.log.is_baseline) ++baseline_plays;

        result.cumulative_regret.push_back(cum_chosen - cum_optimal);
        result.constraint_ok.push_back(!(cum_chosen > (1.0 + algo_cfg.alpha) * cum_baseline));
        result.n_t.push_back(baseline_plays);
        result.trace.push_back(StepTrace{out.candidate_arm, out.gamma, out.safety_pass});
        result.logs.push_back(std::move(out.log));

        if (buffered && t % cfg.update_every == 0) buffered->flush();
    }
    return result;
}

std::vector<bool> recompute_constraint_ok(const std::vector<RoundLog>& logs, double alpha) {
    std::vector<bool> ok;
    ok.reserve(logs.size());
    double cum_chosen = 0.0, cum_baseline = 0.0;
    for (const auto& log : logs) {
        cum_chosen += log.expected_cost_chosen;
        cum_baseline += log.baseline_expected_cost;
        ok.push_back(!(cum_chosen > (1.0 + alpha) * cum_baseline));
    }
    return ok;
}

double violation_percentage(const std::vector<RunResult>& results) {
    std::int64_t total = 0, violated = 0;
    for (const auto& r : results) {
        total += static_cast<std::int64_t>(r.constraint_ok.size());
        for (bool ok : r.constraint_ok)
            if (!ok) ++violated;
    }
    if (total == 0) throw std::invalid_argument("no rounds to evaluate");
    return 100.0 * static_cast<double>(violated) / static_cast<double>(total);
}

namespace {

void mean_stderr(const std::vector<double>& values, double& mean, double& se) {
    const double n = static_cast<double>(values.size());
    mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    if (values.size() < 2) {
        se = 0.0;
        return;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

}  // namespace

AggregateCurves aggregate(const std::vector<RunResult>& results) {
    if (results.empty()) throw std::invalid_argument("nothing to aggregate");
    const std::size_t horizon = results[0].cumulative_regret.size();
    for (const auto& r : results)
        if (r.cumulative_regret.size() != horizon || r.n_t.size() != horizon)
            throw std::invalid_argument("mismatched horizons in aggregation");

    AggregateCurves curves;
    curves.mean_regret.resize(horizon);
    curves.stderr_regret.resize(horizon);
    curves.mean_n.resize(horizon);
    curves.stderr_n.resize(horizon);
    std::vector<double> regret(results.size()), n_plays(results.size());
    for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t r = 0; r < results.size(); ++r) {
            regret[r] = results[r].cumulative_regret[t];
            n_plays[r] = static_cast<double>(results[r].n_t[t]);
        }
        mean_stderr(regret, curves.mean_regret[t], curves.stderr_regret[t]);
        mean_stderr(n_plays, curves.mean_n[t], curves.stderr_n[t]);
    }
    return curves;
}

void write_aggregate_csv(std::ostream& out, const AggregateCurves& curves) {
    out << "round,mean_regret,stderr_regret,mean_n,stderr_n\n";
    for (std::size_t t = 0; t < curves.mean_regret.size(); ++t) {
        out << (t + 1) << ',' << format_double(curves.mean_regret[t]) << ','
            << format_double(curves.stderr_regret[t]) << ',' << format_double(curves.mean_n[t])
            << ',' << format_double(curves.stderr_n[t]) << '\n';
    }
}

DerivedSeries derive_series(const std::vector<RoundLog>& logs) {
    DerivedSeries series;
    double cum_regret = 0.0;
    std::int64_t n = 0;
    for (const auto& log : logs) {
        cum_regret += log.expected_cost_chosen - log.expected_cost_optimal;
        if (log.is_baseline) ++n;
        series.cumulative_regret.push_back(cum_regret);
        series.n_t.push_back(n);
    }
    return series;
}

RunResult result_from_logs(std::vector<RoundLog> logs, double alpha) {
    RunResult result;
    result.constraint_ok = recompute_constraint_ok(logs, alpha);
    DerivedSeries series = derive_series(logs);
    result.cumulative_regret = std::move(series.cumulative_regret);
    result.n_t = std::move(series.n_t);
    result.logs = std::move(logs);
    return result;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = value.find(',', start);
        std::string item =
            trim(pos == std::string::npos ? value.substr(start) : value.substr(start, pos - start));
        if (!item.empty()) out.push_back(item);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

double to_double(const std::string& value, const std::string& key) {
    double v = 0.0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        throw std::invalid_argument("config key '" + key + "': bad number '" + value + "'");
    return v;
}

std::int64_t to_int(const std::string& value, const std::string& key) {
    std::int64_t v = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        throw std::invalid_argument("config key '" + key + "': bad integer '" + value + "'");
    return v;
}

std::uint64_t to_uint(const std::string& value, const std::string& key) {
    std::uint64_t v = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        throw std::invalid_argument("config key '" + key + "': bad integer '" + value + "'");
    return v;
}

bool to_bool(const std::string& value, const std::string& key) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw std::invalid_argument("config key '" + key + "': expected true or false");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& value) {
    std::vector<std::uint64_t> seeds;
    for (const auto& item : split_list(value)) {
        const std::size_t dots = item.find("..");
        if (dots == std::string::npos) {
            seeds.push_back(to_uint(item, "seeds"));
        } else {
            const std::uint64_t lo = to_uint(item.substr(0, dots), "seeds");
            const std::uint64_t hi = to_uint(item.substr(dots + 2), "seeds");
            if (hi < lo) throw std::invalid_argument("seed range is reversed: " + item);
            for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        }
    }
    return seeds;
}

std::string format_compact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace

GridConfig parse_grid_config(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": empty key or value");
        if (!kv.emplace(key, value).second)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": duplicate key '" + key + "'");
    }

    GridConfig grid;
    auto take = [&kv](const std::string& key) -> const std::string* {
        auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        return &it->second;
    };
    auto consume = [&kv](const std::string& key) { kv.erase(key); };

    if (const auto* v = take("algorithm")) grid.algorithms = {parse_algorithm(*v)};
    consume("algorithm");
    if (const auto* v = take("algorithms")) {
        grid.algorithms.clear();
        for (const auto& item : split_list(*v)) grid.algorithms.push_back(parse_algorithm(item));
    }
    consume("algorithms");
    if (grid.algorithms.empty()) grid.algorithms = {Algorithm::c_squarecb};

    if (const auto* v = take("alpha")) grid.alphas = {to_double(*v, "alpha")};
    consume("alpha");
    if (const auto* v = take("alphas")) {
        grid.alphas.clear();
        for (const auto& item : split_list(*v)) grid.alphas.push_back(to_double(item, "alphas"));
    }
    consume("alphas");
    if (grid.alphas.empty()) grid.alphas = {grid.base.algo.alpha};

    if (const auto* v = take("step_size")) grid.step_sizes = {to_double(*v, "step_size")};
    consume("step_size");
    if (const auto* v = take("step_sizes")) {
        grid.step_sizes.clear();
        for (const auto& item : split_list(*v))
            grid.step_sizes.push_back(to_double(item, "step_sizes"));
    }
    consume("step_sizes");
    if (grid.step_sizes.empty()) grid.step_sizes = {grid.base.step_size};

    if (const auto* v = take("seeds")) grid.seeds = parse_seed_list(*v);
    consume("seeds");
    if (grid.seeds.empty()) grid.seeds = {1};

    if (const auto* v = take("horizon")) grid.base.horizon = to_int(*v, "horizon");
    consume("horizon");
    if (const auto* v = take("update_every"))
        grid.base.update_every = static_cast<int>(to_int(*v, "update_every"));
    consume("update_every");
    if (const auto* v = take("warmup_baseline_rounds"))
        grid.base.warmup_baseline_rounds = to_int(*v, "warmup_baseline_rounds");
    consume("warmup_baseline_rounds");

    if (const auto* v = take("delta")) grid.base.algo.delta = to_double(*v, "delta");
    consume("delta");
    if (const auto* v = take("margin_scale"))
        grid.base.algo.margin_scale = to_double(*v, "margin_scale");
    consume("margin_scale");
    if (const auto* v = take("regret_budget")) {
        if (*v == "c_log_T")
            grid.base.algo.regret_budget_kind = RegretBudgetKind::c_log_T;
        else if (*v == "constant")
            grid.base.algo.regret_budget_kind = RegretBudgetKind::constant;
        else
            throw std::invalid_argument("regret_budget must be c_log_T or constant");
    }
    consume("regret_budget");
    if (const auto* v = take("regret_budget_c"))
        grid.base.algo.regret_budget_coefficient = to_double(*v, "regret_budget_c");
    consume("regret_budget_c");
    if (const auto* v = take("schedule_mode")) {
        if (*v == "observed_cost")
            grid.base.algo.schedule_mode = ScheduleMode::observed_cost;
        else if (*v == "oracle_optimal")
            grid.base.algo.schedule_mode = ScheduleMode::oracle_optimal;
        else
            throw std::invalid_argument("schedule_mode must be observed_cost or oracle_optimal");
    }
    consume("schedule_mode");

    if (const auto* v = take("env.kind")) {
        if (*v == "multiclass") {
            grid.base.env.multiclass = true;
        } else if (*v == "linear") {
            grid.base.env.synthetic.kind = EnvKind::linear;
        } else if (*v == "nonlinear_quadratic") {
            grid.base.env.synthetic.kind = EnvKind::nonlinear_quadratic;
        } else if (*v == "nonlinear_cosine") {
            grid.base.env.synthetic.kind = EnvKind::nonlinear_cosine;
        } else {
            throw std::invalid_argument("unknown env.kind '" + *v + "'");
        }
    }
    consume("env.kind");
    if (const auto* v = take("env.dim"))
        grid.base.env.synthetic.dim = static_cast<int>(to_int(*v, "env.dim"));
    consume("env.dim");
    if (const auto* v = take("env.arms"))
        grid.base.env.synthetic.num_arms = static_cast<int>(to_int(*v, "env.arms"));
    consume("env.arms");
    if (const auto* v = take("env.noise")) {
        if (*v == "none")
            grid.base.env.synthetic.noise = NoiseKind::none;
        else if (*v == "bernoulli")
            grid.base.env.synthetic.noise = NoiseKind::bernoulli;
        else
            throw std::invalid_argument("env.noise must be none or bernoulli");
    }
    consume("env.noise");
    if (const auto* v = take("env.baseline")) {
        if (*v == "fixed_arm")
            grid.base.env.synthetic.baseline = BaselineKind::fixed_arm;
        else if (*v == "fixed_suboptimal_policy")
            grid.base.env.synthetic.baseline = BaselineKind::fixed_suboptimal_policy;
        else
            throw std::invalid_argument("env.baseline must be fixed_arm or fixed_suboptimal_policy");
    }
    consume("env.baseline");
    if (const auto* v = take("env.seed_salt")) grid.base.env.synthetic.seed = to_uint(*v, "env.seed_salt");
    consume("env.seed_salt");
    if (const auto* v = take("env.dataset")) grid.base.env.dataset_path = *v;
    consume("env.dataset");
    if (const auto* v = take("env.label_column")) grid.base.env.schema.label_column = *v;
    consume("env.label_column");
    if (const auto* v = take("env.delimiter"))
        grid.base.env.schema.delimiter = (*v == "tab") ? '\t' : (*v)[0];
    consume("env.delimiter");
    if (const auto* v = take("env.has_header"))
        grid.base.env.schema.has_header = to_bool(*v, "env.has_header");
    consume("env.has_header");
    if (const auto* v = take("env.normalize")) {
        if (*v == "unit_ball")
            grid.base.env.schema.normalize = NormalizeMode::unit_ball;
        else if (*v == "per_feature")
            grid.base.env.schema.normalize = NormalizeMode::per_feature;
        else
            throw std::invalid_argument("env.normalize must be unit_ball or per_feature");
    }
    consume("env.normalize");
    if (const auto* v = take("env.baseline_arm"))
        grid.base.env.multiclass_baseline_arm = static_cast<int>(to_int(*v, "env.baseline_arm"));
    consume("env.baseline_arm");
    if (const auto* v = take("env.shuffle_salt"))
        grid.base.env.shuffle_salt = to_uint(*v, "env.shuffle_salt");
    consume("env.shuffle_salt");

    if (const auto* v = take("oracle.kind")) {
        if (*v == "ridge")
            grid.base.oracle = OracleKind::ridge;
        else if (*v == "neural")
            grid.base.oracle = OracleKind::neural;
        else
            throw std::invalid_argument("oracle.kind must be ridge or neural");
    }
    consume("oracle.kind");
    if (const auto* v = take("oracle.ridge.lambda"))
        grid.base.ridge_lambda = to_double(*v, "oracle.ridge.lambda");
    consume("oracle.ridge.lambda");
    if (const auto* v = take("oracle.neural.width"))
        grid.base.net.width = static_cast<int>(to_int(*v, "oracle.neural.width"));
    consume("oracle.neural.width");
    if (const auto* v = take("oracle.neural.depth"))
        grid.base.net.depth = static_cast<int>(to_int(*v, "oracle.neural.depth"));
    consume("oracle.neural.depth");
    if (const auto* v = take("oracle.neural.sigma1"))
        grid.base.net.sigma1 = to_double(*v, "oracle.neural.sigma1");
    consume("oracle.neural.sigma1");
    if (const auto* v = take("oracle.neural.c_p")) grid.base.net.c_p = to_double(*v, "oracle.neural.c_p");
    consume("oracle.neural.c_p");
    if (const auto* v = take("oracle.neural.ensemble"))
        grid.base.net.ensemble_size = static_cast<int>(to_int(*v, "oracle.neural.ensemble"));
    consume("oracle.neural.ensemble");
    if (const auto* v = take("oracle.neural.rho")) grid.base.net.rho = to_double(*v, "oracle.neural.rho");
    consume("oracle.neural.rho");
    if (const auto* v = take("oracle.neural.rho1"))
        grid.base.net.rho1 = to_double(*v, "oracle.neural.rho1");
    consume("oracle.neural.rho1");
    if (const auto* v = take("oracle.neural.activation")) {
        if (*v == "tanh")
            grid.base.net.activation = Activation::tanh_act;
        else if (*v == "relu")
            grid.base.net.activation = Activation::relu;
        else
            throw std::invalid_argument("oracle.neural.activation must be tanh or relu");
    }
    consume("oracle.neural.activation");

    if (!kv.empty()) throw std::invalid_argument("unknown config key '" + kv.begin()->first + "'");

    grid.base.algo.alpha = grid.alphas.front();
    grid.base.step_size = grid.step_sizes.front();
    grid.base.algorithm = grid.algorithms.front();
    validate_run_config(grid.base);
    return grid;
}

GridConfig load_grid_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    return parse_grid_config(in);
}

std::vector<GridCell> expand_grid(const GridConfig& grid) {
    std::vector<GridCell> cells;
    for (Algorithm algo : grid.algorithms) {
        for (double alpha : grid.alphas) {
            for (double step : grid.step_sizes) {
                for (std::uint64_t seed : grid.seeds) {
                    GridCell cell;
                    cell.config = grid.base;
                    cell.config.algorithm = algo;
                    cell.config.algo.alpha = alpha;
                    cell.config.step_size = step;
                    cell.seed = seed;
                    cell.file_name = std::string(algorithm_name(algo)) + "__a" +
                                     format_compact(alpha) + "__lr" + format_compact(step) +
                                     "__seed" + std::to_string(seed) + ".csv";
                    cells.push_back(std::move(cell));
                }
            }
        }
    }
    return cells;
}

std::string render_manifest(const GridConfig& grid, const std::vector<GridCell>& cells) {
    std::ostringstream out;
    const RunConfig& base = grid.base;
    out << "# bandit_lab manifest\n";
    out << "horizon = " << base.horizon << '\n';
    out << "update_every = " << base.update_every << '\n';
    out << "warmup_baseline_rounds = " << base.warmup_baseline_rounds << '\n';
    out << "delta = " << format_double(base.algo.delta) << '\n';
    out << "margin_scale = " << format_double(base.algo.margin_scale) << '\n';
    out << "regret_budget = "
        << (base.algo.regret_budget_kind == RegretBudgetKind::c_log_T ? "c_log_T" : "constant")
        << '\n';
    out << "regret_budget_c = " << format_double(base.algo.regret_budget_coefficient) << '\n';
    out << "schedule_mode = "
        << (base.algo.schedule_mode == ScheduleMode::observed_cost ? "observed_cost"
                                                                   : "oracle_optimal")
        << '\n';
    if (base.env.multiclass) {
        out << "env.kind = multiclass\n";
        out << "env.dataset = " << base.env.dataset_path << '\n';
        out << "env.label_column = " << base.env.schema.label_column << '\n';
        out << "env.delimiter = "
            << (base.env.schema.delimiter == '\t' ? std::string("tab")
                                                  : std::string(1, base.env.schema.delimiter))
            << '\n';
        out << "env.has_header = " << (base.env.schema.has_header ? "true" : "false") << '\n';
        out << "env.normalize = "
            << (base.env.schema.normalize == NormalizeMode::unit_ball ? "unit_ball" : "per_feature")
            << '\n';
        out << "env.baseline_arm = " << base.env.multiclass_baseline_arm << '\n';
        out << "env.shuffle_salt = " << base.env.shuffle_salt << '\n';
    } else {
        const auto& syn = base.env.synthetic;
        out << "env.kind = "
            << (syn.kind == EnvKind::linear
                    ? "linear"
                    : syn.kind == EnvKind::nonlinear_quadratic ? "nonlinear_quadratic"
                                                               : "nonlinear_cosine")
            << '\n';
        out << "env.dim = " << syn.dim << '\n';
        out << "env.arms = " << syn.num_arms << '\n';
        out << "env.noise = " << (syn.noise == NoiseKind::none ? "none" : "bernoulli") << '\n';
        out << "env.baseline = "
            << (syn.baseline == BaselineKind::fixed_arm ? "fixed_arm" : "fixed_suboptimal_policy")
            << '\n';
        out << "env.seed_salt = " << syn.seed << '\n';
    }
    out << "oracle.kind = " << (base.oracle == OracleKind::ridge ? "ridge" : "neural") << '\n';
    out << "oracle.ridge.lambda = " << format_double(base.ridge_lambda) << '\n';
    out << "oracle.neural.width = " << base.net.width << '\n';
    out << "oracle.neural.depth = " << base.net.depth << '\n';
    out << "oracle.neural.sigma1 = " << format_double(base.net.sigma1) << '\n';
    out << "oracle.neural.c_p = " << format_double(base.net.c_p) << '\n';
    out << "oracle.neural.ensemble = " << base.net.ensemble_size << '\n';
    out << "oracle.neural.rho = " << format_double(base.net.rho) << '\n';
    out << "oracle.neural.rho1 = " << format_double(base.net.rho1) << '\n';
    out << "oracle.neural.activation = "
        << (base.net.activation == Activation::tanh_act ? "tanh" : "relu") << '\n';
    for (const auto& cell : cells) {
        out << "run " << cell.file_name << " algorithm=" << algorithm_name(cell.config.algorithm)
            << " alpha=" << format_double(cell.config.algo.alpha)
            << " step_size=" << format_double(cell.config.step_size) << " seed=" << cell.seed
            << '\n';
    }
    return out.str();
}

std::vector<ManifestEntry> read_manifest(std::istream& in) {
    std::vector<ManifestEntry> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("run ", 0) != 0) continue;
        std::istringstream fields(line);
        std::string tag;
        ManifestEntry entry;
        fields >> tag >> entry.file_name;
        std::string token;
        while (fields >> token) {
            const std::size_t eq = token.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("malformed manifest run line: " + line);
            const std::string key = token.substr(0, eq);
            const std::string value = token.substr(eq + 1);
            if (key == "algorithm")
                entry.algorithm = parse_algorithm(value);
            else if (key == "alpha")
                entry.alpha = to_double(value, "manifest alpha");
            else if (key == "step_size")
                entry.step_size = to_double(value, "manifest step_size");
            else if (key == "seed")
                entry.seed = to_uint(value, "manifest seed");
            else
                throw std::runtime_error("unknown manifest field '" + key + "'");
        }
        if (entry.file_name.empty()) throw std::runtime_error("manifest run line without a file");
        entries.push_back(std::move(entry));
    }
    return entries;
}

namespace {

int resolve_threads(int threads, std::size_t cells) {
    if (threads <= 0) {
        if (const char* env = std::getenv("BANDIT_LAB_THREADS")) threads = std::atoi(env);
    }
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), cells));
}

}  // namespace

std::vector<GridCell> run_grid(const GridConfig& grid, const std::string& out_dir, int threads) {
    std::filesystem::create_directories(out_dir);
    std::vector<GridCell> cells = expand_grid(grid);
    if (cells.empty()) throw std::invalid_argument("grid is empty");

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::string first_error;

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                const RunResult result = run_single(cells[i].config, cells[i].seed);
                const std::filesystem::path path = std::filesystem::path(out_dir) / cells[i].file_name;
                std::ofstream out(path);
                if (!out) throw std::runtime_error("cannot write " + path.string());
                int num_arms = 0;
                if (!result.logs.empty())
                    num_arms = static_cast<int>(result.logs[0].predictions.size());
                else
                    num_arms = build_environment(cells[i].config.env, cells[i].seed)->num_arms();
                write_round_logs_csv(out, result.logs, num_arms);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error.empty())
                    first_error = cells[i].file_name + ": " + e.what();
            }
        }
    };

    const int n_threads = resolve_threads(threads, cells.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (!first_error.empty()) throw std::runtime_error(first_error);

    std::ofstream manifest(std::filesystem::path(out_dir) / "manifest.txt");
    if (!manifest) throw std::runtime_error("cannot write manifest in " + out_dir);
    manifest << render_manifest(grid, cells);
    return cells;
}

}  // namespace bandit_lab
