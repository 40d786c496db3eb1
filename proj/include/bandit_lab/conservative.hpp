#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "bandit_lab/core_types.hpp"
#include "bandit_lab/igw.hpp"
#include "bandit_lab/oracle.hpp"

// The conservative decision layer: running safety ledger, the gate that
// compares a candidate action's projected cumulative cost against the
// baseline budget, exploration-rate rules, and the per-round policies built
// from those pieces.

namespace bandit_lab {

// Running sums the gate needs, split by round kind. For the IGW algorithms
// term_A accumulates the expected oracle cost sum_a p_a yhat_a of each
// exploration round; for the UCB comparator it accumulates the played
// arm's upper confidence bound instead.
struct SafetyLedger {
    std::int64_t m = 0;     // exploration rounds so far
    std::int64_t n = 0;     // baseline rounds so far
    double term_A = 0.0;    // cost attributed to exploration rounds
    double term_B = 0.0;    // expected baseline cost over deferred rounds
    double rhs_cum = 0.0;   // expected baseline cost over all rounds
    std::vector<bool> membership;  // true where the baseline was played
};

void ledger_record_explore(SafetyLedger& ledger, double explore_cost, double baseline_expected_cost);
void ledger_record_baseline(SafetyLedger& ledger, double baseline_expected_cost);

// The shared inequality: with slack = margin_scale * sqrt(m * slack_inner),
//   candidate_pred + term_A + term_B + slack
//     <= (1 + alpha) * (rhs_cum + baseline_cost_now).
// The current round's baseline cost joins the right side before comparing.
bool safety_check_core(const SafetyLedger& ledger, double candidate_pred, double alpha,
                       double slack_inner, double margin_scale, double baseline_cost_now);

// Squared-loss gate: slack_inner = regret_budget_at_m + ln(4 / delta),
// where regret_budget_at_m is the budget evaluated at m exploration rounds.
bool safety_check_square(const SafetyLedger& ledger, double candidate_pred, double alpha,
                         double regret_budget_at_m, double delta, double margin_scale,
                         double baseline_cost_now);

// Log-loss gate: slack_inner = regret_budget_T, no confidence term.
bool safety_check_kl(const SafetyLedger& ledger, double candidate_pred, double alpha,
                     double regret_budget_T, double margin_scale, double baseline_cost_now);

// Exploration rate for the squared-loss variant, floored at 1 so round one
// is well defined: max(1, sqrt(K max(1, m) / (regret_budget_T + ln(4/delta)))).
double gamma_square(std::int64_t m_so_far, int num_arms, double regret_budget_T, double delta);

// Doubling state for the first-order variant's episodic exploration rate.
struct GammaScheduleState {
    double eta = 1.0;
    double cum_opt_loss = 0.0;
    int episode_count = 0;
};

// max(10 K, sqrt(K eta / regret_budget_T)).
double gamma_kl(const GammaScheduleState& state, int num_arms, double regret_budget_T);

// Accrue one round's cost estimate; eta doubles whenever the running total
// passes 2 eta, so cum_opt_loss <= 2 eta always holds on exit.
// Throws std::invalid_argument on cost outside [0, 1].
void schedule_update(GammaScheduleState& state, double step_cost);

enum class Algorithm {
    c_squarecb,
    c_fastcb,
    vanilla_squarecb,
    vanilla_fastcb,
    c_linucb,
    linucb,
    always_baseline,
};

const char* algorithm_name(Algorithm algo);
Algorithm parse_algorithm(const std::string& name);

// What one policy step produced beyond the log: the arm the gate judged,
// the exploration rate used, and the verdict. candidate_arm is -1 when the
// policy never proposes one (always_baseline).
struct StepOutcome {
    RoundLog log;
    int candidate_arm = -1;
    double gamma = 0.0;
    bool safety_pass = false;
};

class Policy {
public:
    virtual ~Policy() = default;

    // round is 1-based; uniform_draw in [0, 1) feeds the action sampler.
    virtual StepOutcome step(std::int64_t round, const RoundInputs& inputs, double uniform_draw) = 0;

    virtual const SafetyLedger& ledger() const = 0;
};

// Shared by the two IGW policies: predict all arms, sample the inverse-gap
// distribution, gate, and either play the sampled arm (feeding the oracle)
// or defer to the baseline (leaving the oracle untouched). With gated off
// the gate always passes but the ledger still accrues, so a gated run with
// a vacuous constraint reproduces the vanilla trace exactly. The first
// warmup_baseline_rounds rounds are forced onto the baseline.
class SquareCbPolicy : public Policy {
public:
    SquareCbPolicy(const AlgoConfig& cfg, RegressionOracle& oracle, int num_arms, bool gated,
                   std::int64_t warmup_baseline_rounds = 0);

    StepOutcome step(std::int64_t round, const RoundInputs& inputs, double uniform_draw) override;
    const SafetyLedger& ledger() const override { return ledger_; }

private:
    AlgoConfig cfg_;
    RegressionOracle* oracle_;
    int num_arms_;
    bool gated_;
    std::int64_t warmup_;
    double budget_horizon_;
    SafetyLedger ledger_;
};

class FastCbPolicy : public Policy {
public:
    FastCbPolicy(const AlgoConfig& cfg, RegressionOracle& oracle, int num_arms, bool gated,
                 std::int64_t warmup_baseline_rounds = 0);

    StepOutcome step(std::int64_t round, const RoundInputs& inputs, double uniform_draw) override;
    const SafetyLedger& ledger() const override { return ledger_; }
    const GammaScheduleState& schedule() const { return schedule_; }

private:
    AlgoConfig cfg_;
    RegressionOracle* oracle_;
    int num_arms_;
    bool gated_;
    std::int64_t warmup_;
    double budget_horizon_;
    SafetyLedger ledger_;
    GammaScheduleState schedule_;
};

// Linear-UCB comparator. Maintains a ridge estimate of the cost vector and
// confidence widths beta_t ||x||_{V^{-1}} with
//   beta_t = sqrt(lambda) s_bound + sqrt(2 ln(1/delta) + d ln(1 + t/(d lambda))).
// The candidate is the arm with the lowest cost LCB; the gate compares the
// sum of played upper bounds (term_A) plus the candidate's UCB against the
// baseline budget. Model updates happen only on played rounds. Logged
// predictions are the point estimates clamped into [0, 1]; the logged
// distribution is the one-hot of the played arm.
class LinUcbPolicy : public Policy {
public:
    LinUcbPolicy(const AlgoConfig& cfg, int num_arms, int dim, bool gated, double lambda = 1.0,
                 double s_bound = 1.0);

    StepOutcome step(std::int64_t round, const RoundInputs& inputs, double uniform_draw) override;
    const SafetyLedger& ledger() const override { return ledger_; }

    const Eigen::MatrixXd& gram() const { return gram_; }
    const Eigen::VectorXd& theta() const { return theta_; }

private:
    AlgoConfig cfg_;
    int num_arms_;
    int dim_;
    bool gated_;
    double lambda_;
    double s_bound_;
    Eigen::MatrixXd gram_;
    Eigen::VectorXd moment_;
    Eigen::VectorXd theta_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    SafetyLedger ledger_;
};

// Plays the baseline arm every round. Logged predictions are zeros.
class AlwaysBaselinePolicy : public Policy {
public:
    explicit AlwaysBaselinePolicy(int num_arms) : num_arms_(num_arms) {}

    StepOutcome step(std::int64_t round, const RoundInputs& inputs, double uniform_draw) override;
    const SafetyLedger& ledger() const override { return ledger_; }

private:
    int num_arms_;
    SafetyLedger ledger_;
};

// oracle may be null for c_linucb, linucb and always_baseline; the IGW
// algorithms require it.
std::unique_ptr<Policy> make_policy(Algorithm algo, const AlgoConfig& cfg, RegressionOracle* oracle,
                                    int num_arms, int dim, std::int64_t warmup_baseline_rounds = 0);

}  // namespace bandit_lab
