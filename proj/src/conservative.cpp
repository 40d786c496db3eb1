#include "bandit_lab/conservative.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bandit_lab {

void ledger_record_explore(SafetyLedger& ledger, double explore_cost,
                           double baseline_expected_cost) {
    ++ledger.m;
    ledger.term_A += explore_cost;
    ledger.rhs_cum += baseline_expected_cost;
    ledger.membership.push_back(false);
}

void ledger_record_baseline(SafetyLedger& ledger, double baseline_expected_cost) {
    ++ledger.n;
    ledger.term_B += baseline_expected_cost;
    ledger.rhs_cum += baseline_expected_cost;
    ledger.membership.push_back(true);
}

bool safety_check_core(const SafetyLedger& ledger, double candidate_pred, double alpha,
                       double slack_inner, double margin_scale, double baseline_cost_now) {
    const double slack =
        margin_scale * std::sqrt(static_cast<double>(ledger.m) * slack_inner);
    const double lhs = candidate_pred + ledger.term_A + ledger.term_B + slack;
    const double rhs = (1.0 + alpha) * (ledger.rhs_cum + baseline_cost_now);
    return lhs <= rhs;
}

bool safety_check_square(const SafetyLedger& ledger, double candidate_pred, double alpha,
                         double regret_budget_at_m, double delta, double margin_scale,
                         double baseline_cost_now) {
    return safety_check_core(ledger, candidate_pred, alpha,
                             regret_budget_at_m + std::log(4.0 / delta), margin_scale,
                             baseline_cost_now);
}

bool safety_check_kl(const SafetyLedger& ledger, double candidate_pred, double alpha,
                     double regret_budget_T, double margin_scale, double baseline_cost_now) {
    return safety_check_core(ledger, candidate_pred, alpha, regret_budget_T, margin_scale,
                             baseline_cost_now);
}

double gamma_square(std::int64_t m_so_far, int num_arms, double regret_budget_T, double delta) {
    if (m_so_far < 0) throw std::invalid_argument("negative exploration count");
    const double m_eff = static_cast<double>(std::max<std::int64_t>(1, m_so_far));
    return std::max(1.0, std::sqrt(num_arms * m_eff / (regret_budget_T + std::log(4.0 / delta))));
}

double gamma_kl(const GammaScheduleState& state, int num_arms, double regret_budget_T) {
    return std::max(10.0 * num_arms, std::sqrt(num_arms * state.eta / regret_budget_T));
}

void schedule_update(GammaScheduleState& state, double step_cost) {
    if (!(std::isfinite(step_cost) && step_cost >= 0.0 && step_cost <= 1.0))
        throw std::invalid_argument("schedule cost outside [0, 1]");
    state.cum_opt_loss += step_cost;
    while (state.cum_opt_loss > 2.0 * state.eta) {
        state.eta *= 2.0;
        ++state.episode_count;
    }
}

const char* algorithm_name(Algorithm algo) {
    switch (algo) {
        case Algorithm::c_squarecb: return "c_squarecb";
        case Algorithm::c_fastcb: return "c_fastcb";
        case Algorithm::vanilla_squarecb: return "vanilla_squarecb";
        case Algorithm::vanilla_fastcb: return "vanilla_fastcb";
        case Algorithm::c_linucb: return "c_linucb";
        case Algorithm::linucb: return "linucb";
        case Algorithm::always_baseline: return "always_baseline";
    }
    throw std::invalid_argument("unknown algorithm");
}

Algorithm parse_algorithm(const std::string& name) {
    for (Algorithm algo :
         {Algorithm::c_squarecb, Algorithm::c_fastcb, Algorithm::vanilla_squarecb,
          Algorithm::vanilla_fastcb, Algorithm::c_linucb, Algorithm::linucb,
          Algorithm::always_baseline}) {
        if (name == algorithm_name(algo)) return algo;
    }
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

namespace {

void check_inputs(const RoundInputs& inputs, int num_arms) {
    if (inputs.contexts.num_arms() != num_arms ||
        static_cast<int>(inputs.expected_costs.size()) != num_arms ||
        static_cast<int>(inputs.sampled_costs.size()) != num_arms)
        throw std::invalid_argument("round inputs disagree on the number of arms");
    if (inputs.baseline_arm < 0 || inputs.baseline_arm >= num_arms)
        throw std::invalid_argument("baseline arm out of range");
}

RoundLog base_log(std::int64_t round, const RoundInputs& inputs, int played, bool is_baseline) {
    RoundLog log;
    log.round = round;
    log.chosen_arm = played;
    log.is_baseline = is_baseline;
    log.observed_cost = inputs.sampled_costs[played];
    log.expected_cost_chosen = inputs.expected_costs[played];
    log.expected_cost_optimal = inputs.expected_costs[inputs.optimal_arm()];
    log.baseline_expected_cost = inputs.baseline_expected_cost();
    return log;
}

double expected_oracle_cost(const ActionDistribution& dist, const std::vector<double>& preds) {
    double cost = 0.0;
    for (std::size_t a = 0; a < preds.size(); ++a) cost += dist.probs[a] * preds[a];
    return cost;
}

}  // namespace

SquareCbPolicy::SquareCbPolicy(const AlgoConfig& cfg, RegressionOracle& oracle, int num_arms,
                               bool gated, std::int64_t warmup_baseline_rounds)
    : cfg_(cfg), oracle_(&oracle), num_arms_(num_arms), gated_(gated),
      warmup_(warmup_baseline_rounds) {
    validate_algo_config(cfg);
    if (num_arms < 2) throw std::invalid_argument("need at least two arms");
    if (warmup_ < 0) throw std::invalid_argument("warmup must be nonnegative");
    budget_horizon_ = regret_budget(cfg.regret_budget_kind, cfg.regret_budget_coefficient,
                                    cfg.horizon);
}

StepOutcome SquareCbPolicy::step(std::int64_t round, const RoundInputs& inputs,
                                 double uniform_draw) {
    check_inputs(inputs, num_arms_);
    std::vector<double> preds(num_arms_);
    for (int a = 0; a < num_arms_; ++a) preds[a] = oracle_->predict(inputs.contexts.vectors[a]);

    StepOutcome out;
    out.gamma = gamma_square(ledger_.m, num_arms_, budget_horizon_, cfg_.delta);
    const ActionDistribution dist = igw_square(preds, out.gamma);
    out.candidate_arm = sample_arm(dist, uniform_draw);

    const double baseline_cost_now = inputs.baseline_expected_cost();
    if (!gated_) {
        out.safety_pass = true;
    } else if (round <= warmup_) {
        out.safety_pass = false;
    } else {
        const double budget_at_m = regret_budget(cfg_.regret_budget_kind,
                                                 cfg_.regret_budget_coefficient, ledger_.m);
        out.safety_pass = safety_check_square(ledger_, preds[out.candidate_arm], cfg_.alpha,
                                              budget_at_m, cfg_.delta, cfg_.margin_scale,
                                              baseline_cost_now);
    }

    if (out.safety_pass) {
        out.log = base_log(round, inputs, out.candidate_arm, false);
        out.log.distribution = dist.probs;
        ledger_record_explore(ledger_, expected_oracle_cost(dist, preds), baseline_cost_now);
        oracle_->update(inputs.contexts.vectors[out.candidate_arm], out.log.observed_cost);
    } else {
        out.log = base_log(round, inputs, inputs.baseline_arm, true);
        ledger_record_baseline(ledger_, baseline_cost_now);
    }
    out.log.predictions = std::move(preds);
    return out;
}

FastCbPolicy::FastCbPolicy(const AlgoConfig& cfg, RegressionOracle& oracle, int num_arms,
                           bool gated, std::int64_t warmup_baseline_rounds)
    : cfg_(cfg), oracle_(&oracle), num_arms_(num_arms), gated_(gated),
      warmup_(warmup_baseline_rounds) {
    validate_algo_config(cfg);
    if (num_arms < 2) throw std::invalid_argument("need at least two arms");
    if (warmup_ < 0) throw std::invalid_argument("warmup must be nonnegative");
    budget_horizon_ = regret_budget(cfg.regret_budget_kind, cfg.regret_budget_coefficient,
                                    cfg.horizon);
}

StepOutcome FastCbPolicy::step(std::int64_t round, const RoundInputs& inputs,
                               double uniform_draw) {
    check_inputs(inputs, num_arms_);
    std::vector<double> preds(num_arms_);
    for (int a = 0; a < num_arms_; ++a)
        preds[a] = kl_clamp(oracle_->predict(inputs.contexts.vectors[a]));

    StepOutcome out;
    out.gamma = gamma_kl(schedule_, num_arms_, budget_horizon_);
    const ActionDistribution dist = igw_kl(preds, out.gamma);
    out.candidate_arm = sample_arm(dist, uniform_draw);

    const double baseline_cost_now = inputs.baseline_expected_cost();
    if (!gated_) {
        out.safety_pass = true;
    } else if (round <= warmup_) {
        out.safety_pass = false;
    } else {
        out.safety_pass = safety_check_kl(ledger_, preds[out.candidate_arm], cfg_.alpha,
                                          budget_horizon_, cfg_.margin_scale, baseline_cost_now);
    }

    if (out.safety_pass) {
        out.log = base_log(round, inputs, out.candidate_arm, false);
        out.log.distribution = dist.probs;
        ledger_record_explore(ledger_, expected_oracle_cost(dist, preds), baseline_cost_now);
        oracle_->update(inputs.contexts.vectors[out.candidate_arm], out.log.observed_cost);
        const double schedule_cost = cfg_.schedule_mode == ScheduleMode::oracle_optimal
                                         ? inputs.expected_costs[inputs.optimal_arm()]
                                         : out.log.observed_cost;
        schedule_update(schedule_, schedule_cost);
    } else {
        out.log = base_log(round, inputs, inputs.baseline_arm, true);
        ledger_record_baseline(ledger_, baseline_cost_now);
    }
    out.log.predictions = std::move(preds);
    return out;
}

LinUcbPolicy::LinUcbPolicy(const AlgoConfig& cfg, int num_arms, int dim, bool gated, double lambda,
                           double s_bound)
    : cfg_(cfg), num_arms_(num_arms), dim_(dim), gated_(gated), lambda_(lambda),
      s_bound_(s_bound) {
    validate_algo_config(cfg);
    if (num_arms < 2) throw std::invalid_argument("need at least two arms");
    if (dim < 1) throw std::invalid_argument("context dimension must be positive");
    if (!(std::isfinite(lambda) && lambda > 0.0))
        throw std::invalid_argument("lambda must be positive");
    gram_ = lambda * Eigen::MatrixXd::Identity(dim, dim);
    moment_ = Eigen::VectorXd::Zero(dim);
    theta_ = Eigen::VectorXd::Zero(dim);
    llt_.compute(gram_);
}

StepOutcome LinUcbPolicy::step(std::int64_t round, const RoundInputs& inputs,
                               double uniform_draw) {
    (void)uniform_draw;  // deterministic policy; the draw is consumed for stream parity
    check_inputs(inputs, num_arms_);
    const double t = static_cast<double>(round);
    const double beta = std::sqrt(lambda_) * s_bound_ +
                        std::sqrt(2.0 * std::log(1.0 / cfg_.delta) +
                                  dim_ * std::log(1.0 + t / (dim_ * lambda_)));

    std::vector<double> mean(num_arms_), lower(num_arms_), upper(num_arms_);
    for (int a = 0; a < num_arms_; ++a) {
        const Eigen::VectorXd& x = inputs.contexts.vectors[a];
        if (x.size() != dim_) throw std::invalid_argument("context dimension mismatch");
        const double mu = theta_.dot(x);
        const double width = beta * std::sqrt(x.dot(llt_.solve(x)));
        mean[a] = mu;
        lower[a] = mu - width;
        upper[a] = mu + width;
    }

    StepOutcome out;
    out.candidate_arm = 0;
    for (int a = 1; a < num_arms_; ++a)
        if (lower[a] < lower[out.candidate_arm]) out.candidate_arm = a;

    const double baseline_cost_now = inputs.baseline_expected_cost();
    out.safety_pass = !gated_ || safety_check_core(ledger_, upper[out.candidate_arm], cfg_.alpha,
                                                   0.0, 0.0, baseline_cost_now);

    if (out.safety_pass) {
        out.log = base_log(round, inputs, out.candidate_arm, false);
        out.log.distribution.assign(num_arms_, 0.0);
        out.log.distribution[out.candidate_arm] = 1.0;
        ledger_record_explore(ledger_, upper[out.candidate_arm], baseline_cost_now);
        const Eigen::VectorXd& x = inputs.contexts.vectors[out.candidate_arm];
        gram_.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0);
        gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
        llt_.rankUpdate(x, 1.0);
        moment_ += out.log.observed_cost * x;
        theta_ = llt_.solve(moment_);
    } else {
        out.log = base_log(round, inputs, inputs.baseline_arm, true);
        ledger_record_baseline(ledger_, baseline_cost_now);
    }
    out.log.predictions.resize(num_arms_);
    for (int a = 0; a < num_arms_; ++a) out.log.predictions[a] = std::clamp(mean[a], 0.0, 1.0);
    return out;
}

StepOutcome AlwaysBaselinePolicy::step(std::int64_t round, const RoundInputs& inputs,
                                       double uniform_draw) {
    (void)uniform_draw;
    check_inputs(inputs, num_arms_);
    StepOutcome out;
    out.log = base_log(round, inputs, inputs.baseline_arm, true);
    out.log.predictions.assign(num_arms_, 0.0);
    ledger_record_baseline(ledger_, inputs.baseline_expected_cost());
    return out;
}

std::unique_ptr<Policy> make_policy(Algorithm algo, const AlgoConfig& cfg,
                                    RegressionOracle* oracle, int num_arms, int dim,
                                    std::int64_t warmup_baseline_rounds) {
    const bool needs_oracle = algo == Algorithm::c_squarecb || algo == Algorithm::c_fastcb ||
                              algo == Algorithm::vanilla_squarecb ||
                              algo == Algorithm::vanilla_fastcb;
    if (needs_oracle && oracle == nullptr)
        throw std::invalid_argument("this algorithm requires a regression oracle");
    switch (algo) {
        case Algorithm::c_squarecb:
            return std::make_unique<SquareCbPolicy>(cfg, *oracle, num_arms, true,
                                                    warmup_baseline_rounds);
        case Algorithm::vanilla_squarecb:
            return std::make_unique<SquareCbPolicy>(cfg, *oracle, num_arms, false);
        case Algorithm::c_fastcb:
            return std::make_unique<FastCbPolicy>(cfg, *oracle, num_arms, true,
                                                  warmup_baseline_rounds);
        case Algorithm::vanilla_fastcb:
            return std::make_unique<FastCbPolicy>(cfg, *oracle, num_arms, false);
        case Algorithm::c_linucb:
            return std::make_unique<LinUcbPolicy>(cfg, num_arms, dim, true);
        case Algorithm::linucb:
            return std::make_unique<LinUcbPolicy>(cfg, num_arms, dim, false);
        case Algorithm::always_baseline:
            return std::make_unique<AlwaysBaselinePolicy>(num_arms);
    }
    throw std::invalid_argument("unknown algorithm");
}

}  // namespace bandit_lab
