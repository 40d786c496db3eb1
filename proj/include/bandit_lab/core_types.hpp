#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

// Shared value types and their wire formats. Everything downstream (samplers,
// oracles, algorithms, the harness) speaks in these types, so their
// invariants are enforced here and nowhere else.

namespace bandit_lab {

// One round's per-arm feature vectors. All vectors share a dimension and
// live inside the unit ball.
struct ContextSet {
    std::vector<Eigen::VectorXd> vectors;  // size K, each of dimension d

    int num_arms() const { return static_cast<int>(vectors.size()); }
    int dim() const { return vectors.empty() ? 0 : static_cast<int>(vectors[0].size()); }
};

// Validates (and optionally repairs) a context set in place.
// Throws std::invalid_argument on: empty set, mismatched dimensions, or a
// norm above 1 + 1e-9 when auto_normalize is off. With auto_normalize on,
// every vector is rescaled by 1 / max(1, largest norm in the set).
// Idempotent: a second call never changes anything.
void validate_context_set(ContextSet& contexts, bool auto_normalize = false);

// Per-round record emitted by every algorithm. `distribution` is empty on
// rounds where the baseline was played (there was no sampling distribution
// to speak of; the candidate draw is reconstructible from predictions).
struct RoundLog {
    std::int64_t round = 0;  // 1-based
    int chosen_arm = 0;
    bool is_baseline = false;
    std::vector<double> predictions;   // K entries in [0, 1]
    std::vector<double> distribution;  // K entries, or empty on baseline rounds
    double observed_cost = 0.0;
    double expected_cost_chosen = 0.0;
    double expected_cost_optimal = 0.0;
    double baseline_expected_cost = 0.0;
};

// Throws std::invalid_argument if a log violates its invariants (field
// ranges, distribution present-iff-played shape, expected_cost_chosen >=
// expected_cost_optimal).
void validate_round_log(const RoundLog& log, int num_arms);

// CSV serialization. Column layout, with K inferred from the header:
//   round,arm,is_baseline,pred_0..pred_{K-1},p_0..p_{K-1},observed_cost,
//   expected_cost_chosen,expected_cost_optimal,baseline_expected_cost
// Floats are written with 17 significant digits (shortest-exact is not used
// so that every field carries full precision); reading back reproduces the
// original doubles bit for bit. Baseline rounds leave the p_* fields empty.
// Lines are LF-terminated UTF-8. The header row is mandatory.
void write_round_logs_csv(std::ostream& out, const std::vector<RoundLog>& logs, int num_arms);
std::vector<RoundLog> read_round_logs_csv(std::istream& in, int& num_arms_out);

// Formats one double the way every CSV writer in this project does.
std::string format_double(double v);

enum class RegretBudgetKind { constant, c_log_T };
enum class ScheduleMode { oracle_optimal, observed_cost };

// Knobs shared by the conservative algorithms. Defaults follow the framework
// paper's stated constants; margin_scale rescales the safety slack because
// the literal constant is a loose union-bound artifact and real deployments
// need it adjustable.
struct AlgoConfig {
    double alpha = 0.1;   // budget multiplier in the performance constraint, > 0
    double delta = 0.1;   // confidence level in (0, 1)
    std::int64_t horizon = 0;  // T >= 0
    RegretBudgetKind regret_budget_kind = RegretBudgetKind::c_log_T;
    double regret_budget_coefficient = 1.0;  // > 0
    double margin_scale = 16.0;              // >= 0
    ScheduleMode schedule_mode = ScheduleMode::observed_cost;
};

// Throws std::invalid_argument on out-of-range fields.
void validate_algo_config(const AlgoConfig& cfg);

// Inputs one algorithm step consumes, assembled by the harness from the
// environment. sampled_costs[a] is the cost that would be observed if arm a
// were played this round (all arms share the round's noise draw).
struct RoundInputs {
    ContextSet contexts;
    std::vector<double> expected_costs;  // true h per arm
    std::vector<double> sampled_costs;   // realized cost per arm
    int baseline_arm = 0;

    double baseline_expected_cost() const { return expected_costs[baseline_arm]; }
    int optimal_arm() const;  // argmin of expected_costs, lowest index on ties
};

}  // namespace bandit_lab
