#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bandit_lab/core_types.hpp"

using namespace bandit_lab;

namespace {

ContextSet two_arm_set(double scale) {
    ContextSet cs;
    cs.vectors.push_back(scale * Eigen::Vector2d(0.6, 0.8));
    cs.vectors.push_back(scale * Eigen::Vector2d(1.0, 0.0));
    return cs;
}

RoundLog sample_log() {
    RoundLog log;
    log.round = 3;
    log.chosen_arm = 1;
    log.is_baseline = false;
    log.predictions = {0.25, 0.5};
    log.distribution = {0.4, 0.6};
    log.observed_cost = 1.0;
    log.expected_cost_chosen = 0.5;
    log.expected_cost_optimal = 0.25;
    log.baseline_expected_cost = 0.25;
    return log;
}

}  // namespace

TEST_CASE("validate_context_set accepts unit-ball vectors untouched") {
    ContextSet cs = two_arm_set(1.0);
    const ContextSet before = cs;
    validate_context_set(cs);
    CHECK(cs.vectors[0] == before.vectors[0]);
    CHECK(cs.vectors[1] == before.vectors[1]);
}

TEST_CASE("validate_context_set rescales by the largest norm, idempotently") {
    ContextSet cs = two_arm_set(2.0);  // norms 2 and 2
    validate_context_set(cs, true);
    CHECK(cs.vectors[0].norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cs.vectors[1].isApprox(Eigen::Vector2d(1.0, 0.0), 1e-12));

    // Norms below 1 are left alone even with auto_normalize on.
    ContextSet small = two_arm_set(0.5);
    const ContextSet before = small;
    validate_context_set(small, true);
    CHECK(small.vectors[0] == before.vectors[0]);

    // Second pass is a no-op bit for bit.
    ContextSet again = cs;
    validate_context_set(again, true);
    CHECK(again.vectors[0] == cs.vectors[0]);
    CHECK(again.vectors[1] == cs.vectors[1]);
}

TEST_CASE("validate_context_set rejects malformed sets") {
    ContextSet empty;
    CHECK_THROWS_AS(validate_context_set(empty), std::invalid_argument);

    ContextSet mismatched;
    mismatched.vectors.push_back(Eigen::Vector2d(0.1, 0.1));
    mismatched.vectors.push_back(Eigen::Vector3d(0.1, 0.1, 0.1));
    CHECK_THROWS_AS(validate_context_set(mismatched), std::invalid_argument);

    ContextSet oversized = two_arm_set(1.5);
    CHECK_THROWS_AS(validate_context_set(oversized), std::invalid_argument);

    ContextSet nan_set = two_arm_set(0.5);
    nan_set.vectors[0][0] = std::nan("");
    CHECK_THROWS_AS(validate_context_set(nan_set, true), std::invalid_argument);
}

TEST_CASE("validate_round_log enforces invariants") {
    validate_round_log(sample_log(), 2);

    RoundLog bad = sample_log();
    bad.chosen_arm = 2;
    CHECK_THROWS_AS(validate_round_log(bad, 2), std::invalid_argument);

    bad = sample_log();
    bad.predictions = {0.25, 1.5};
    CHECK_THROWS_AS(validate_round_log(bad, 2), std::invalid_argument);

    bad = sample_log();
    bad.distribution = {0.7, 0.6};  // sums to 1.3
    CHECK_THROWS_AS(validate_round_log(bad, 2), std::invalid_argument);

    bad = sample_log();
    bad.is_baseline = true;  // baseline rounds carry no distribution
    CHECK_THROWS_AS(validate_round_log(bad, 2), std::invalid_argument);
    bad.distribution.clear();
    validate_round_log(bad, 2);

    bad = sample_log();
    bad.distribution.clear();  // played rounds must carry one
    CHECK_THROWS_AS(validate_round_log(bad, 2), std::invalid_argument);

    bad = sample_log();
    bad.expected_cost_optimal = 0.9;  // above the chosen cost
    CHECK_THROWS_AS(validate_round_log(bad, 2), std::invalid_argument);

    bad = sample_log();
    bad.round = 0;
    CHECK_THROWS_AS(validate_round_log(bad, 2), std::invalid_argument);
}

TEST_CASE("format_double round-trips doubles bit for bit") {
    for (double v : {0.1, 1.0 / 3.0, 0.49504950495049505, 1e-300, 123456789.123456789, 0.0}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("round log CSV round-trips bit for bit") {
    std::vector<RoundLog> logs;
    RoundLog played = sample_log();
    played.predictions = {1.0 / 3.0, 0.123456789012345678};
    played.distribution = {0.5 + 1e-17, 0.5};
    played.observed_cost = 0.7071067811865476;
    logs.push_back(played);

    RoundLog deferred = sample_log();
    deferred.round = 4;
    deferred.chosen_arm = 0;
    deferred.is_baseline = true;
    deferred.distribution.clear();
    deferred.expected_cost_chosen = 0.25;
    logs.push_back(deferred);

    std::ostringstream out;
    write_round_logs_csv(out, logs, 2);
    const std::string text = out.str();

    CHECK(text.rfind("round,arm,is_baseline,pred_0,pred_1,p_0,p_1,observed_cost,"
                     "expected_cost_chosen,expected_cost_optimal,baseline_expected_cost\n",
                     0) == 0);
    CHECK(text.find("\r") == std::string::npos);

    // Baseline row leaves the p fields empty.
    const std::size_t second_row = text.find("\n4,");
    REQUIRE(second_row != std::string::npos);
    CHECK(text.find(",,,", second_row) != std::string::npos);

    std::istringstream in(text);
    int num_arms = 0;
    const std::vector<RoundLog> back = read_round_logs_csv(in, num_arms);
    CHECK(num_arms == 2);
    REQUIRE(back.size() == 2);
    CHECK(back[0].predictions[0] == played.predictions[0]);
    CHECK(back[0].predictions[1] == played.predictions[1]);
    CHECK(back[0].distribution[0] == played.distribution[0]);
    CHECK(back[0].observed_cost == played.observed_cost);
    CHECK(back[1].is_baseline);
    CHECK(back[1].distribution.empty());
    CHECK(back[1].round == 4);
}

TEST_CASE("round log CSV reader rejects malformed input") {
    std::istringstream bad_header("round,arm\n");
    int num_arms = 0;
    CHECK_THROWS_AS(read_round_logs_csv(bad_header, num_arms), std::runtime_error);

    std::ostringstream out;
    write_round_logs_csv(out, {sample_log()}, 2);
    std::string text = out.str();
    text += "notanumber,1,0,0,0,0.5,0.5,0,0,0,0\n";
    std::istringstream bad_row(text);
    CHECK_THROWS_AS(read_round_logs_csv(bad_row, num_arms), std::runtime_error);

    // A played row with empty p fields violates the shape contract.
    std::string missing =
        "round,arm,is_baseline,pred_0,pred_1,p_0,p_1,observed_cost,"
        "expected_cost_chosen,expected_cost_optimal,baseline_expected_cost\n"
        "1,0,0,0.5,0.5,,,0,0.5,0.5,0.5\n";
    std::istringstream missing_p(missing);
    CHECK_THROWS_AS(read_round_logs_csv(missing_p, num_arms), std::runtime_error);
}

TEST_CASE("validate_algo_config enforces ranges") {
    AlgoConfig cfg;
    validate_algo_config(cfg);

    AlgoConfig bad = cfg;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(validate_algo_config(bad), std::invalid_argument);
    bad = cfg;
    bad.delta = 1.0;
    CHECK_THROWS_AS(validate_algo_config(bad), std::invalid_argument);
    bad = cfg;
    bad.horizon = -1;
    CHECK_THROWS_AS(validate_algo_config(bad), std::invalid_argument);
    bad = cfg;
    bad.regret_budget_coefficient = 0.0;
    CHECK_THROWS_AS(validate_algo_config(bad), std::invalid_argument);
    bad = cfg;
    bad.margin_scale = -0.5;
    CHECK_THROWS_AS(validate_algo_config(bad), std::invalid_argument);
}

TEST_CASE("optimal_arm is the argmin with lowest index on ties") {
    RoundInputs inputs;
    inputs.expected_costs = {0.5, 0.2, 0.2, 0.9};
    CHECK(inputs.optimal_arm() == 1);
    inputs.expected_costs = {0.1, 0.2};
    CHECK(inputs.optimal_arm() == 0);
}
