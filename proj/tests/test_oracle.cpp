#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "bandit_lab/oracle.hpp"
#include "bandit_lab/rng.hpp"

using namespace bandit_lab;

TEST_CASE("regret_budget shapes and floor") {
    CHECK(regret_budget(RegretBudgetKind::constant, 5.0, 12345) == 5.0);
    CHECK(regret_budget(RegretBudgetKind::constant, 0.25, 7) == 1.0);
    CHECK(regret_budget(RegretBudgetKind::c_log_T, 1.0, 0) == 1.0);
    CHECK(regret_budget(RegretBudgetKind::c_log_T, 2.0, 19) ==
          doctest::Approx(2.0 * std::log(20.0)).epsilon(1e-15));
    CHECK(regret_budget(RegretBudgetKind::c_log_T, 1.0, 100) ==
          doctest::Approx(std::log(101.0)).epsilon(1e-15));

    CHECK_THROWS_AS(regret_budget(RegretBudgetKind::constant, 0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(regret_budget(RegretBudgetKind::c_log_T, -1.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(regret_budget(RegretBudgetKind::c_log_T, 1.0, -1), std::invalid_argument);
}

TEST_CASE("regret_budget is nondecreasing in T") {
    for (auto kind : {RegretBudgetKind::constant, RegretBudgetKind::c_log_T}) {
        double prev = 0.0;
        for (std::int64_t T : {0, 1, 2, 10, 100, 10000}) {
            const double b = regret_budget(kind, 0.7, T);
            CHECK(b >= 1.0);
            CHECK(b >= prev);
            prev = b;
        }
    }
}

TEST_CASE("kl_clamp pins the interval and is idempotent") {
    CHECK(kl_clamp(0.5) == 0.5);
    CHECK(kl_clamp(0.0) == 1e-6);
    CHECK(kl_clamp(1.0) == 1.0 - 1e-6);
    CHECK(kl_clamp(-3.0) == 1e-6);
    CHECK(kl_clamp(kl_clamp(0.9999999)) == kl_clamp(0.9999999));
    CHECK(kl_clamp(0.2) <= kl_clamp(0.3));
    CHECK_THROWS_AS(kl_clamp(std::nan("")), std::invalid_argument);
}

TEST_CASE("kl_loss conventions") {
    CHECK(kl_loss(0.3, 0.3) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(kl_loss(0.25, 1.0) == doctest::Approx(-std::log(0.25)).epsilon(1e-15));
    CHECK(kl_loss(0.25, 0.0) == doctest::Approx(-std::log(0.75)).epsilon(1e-15));
    CHECK(kl_loss(0.5, 0.25) ==
          doctest::Approx(0.25 * std::log(0.5) + 0.75 * std::log(1.5)).epsilon(1e-12));

    // Finite across the whole clamped square.
    for (double q : {kl_clamp(0.0), 0.5, kl_clamp(1.0)})
        for (double y : {0.0, 0.5, 1.0}) CHECK(std::isfinite(kl_loss(q, y)));
}

TEST_CASE("ridge worked examples") {
    RidgeOracle fresh(2, 1.0);
    CHECK(fresh.predict(Eigen::Vector2d(0.3, -0.7)) == 0.0);
    CHECK(fresh.count() == 0);

    RidgeOracle oracle(2, 1.0);
    for (int i = 0; i < 100; ++i) oracle.update(Eigen::Vector2d(1.0, 0.0), 0.5);
    CHECK(oracle.predict(Eigen::Vector2d(1.0, 0.0)) ==
          doctest::Approx(50.0 / 101.0).epsilon(1e-15));
    CHECK(oracle.predict(Eigen::Vector2d(0.0, 1.0)) == 0.0);
    CHECK(oracle.count() == 100);

    RidgeOracle single(2, 1.0);
    single.update(Eigen::Vector2d(1.0, 0.0), 1.0);
    CHECK(single.gram()(0, 0) == 2.0);
    CHECK(single.gram()(0, 1) == 0.0);
    CHECK(single.gram()(1, 0) == 0.0);
    CHECK(single.gram()(1, 1) == 1.0);
    CHECK(single.moment() == Eigen::Vector2d(1.0, 0.0));

    CHECK_THROWS_AS(single.update(Eigen::Vector2d(1.0, 0.0), 1.5), std::invalid_argument);
    CHECK_THROWS_AS(single.update(Eigen::Vector2d(1.0, 0.0), -0.1), std::invalid_argument);
    CHECK_THROWS_AS(single.predict(Eigen::Vector3d(1.0, 0.0, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(RidgeOracle(2, 0.0), std::invalid_argument);
}

TEST_CASE("ridge incremental solve matches a from-scratch solve") {
    std::mt19937_64 eng(11);
    const int d = 6;
    RidgeOracle oracle(d, 0.5);
    Eigen::MatrixXd gram = 0.5 * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd moment = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < 200; ++i) {
        const Eigen::VectorXd x = unit_sphere_vector(d, eng);
        const double y = uniform01(eng);
        oracle.update(x, y);
        gram += x * x.transpose();
        moment += y * x;
    }
    const Eigen::VectorXd direct = gram.ldlt().solve(moment);
    CHECK((oracle.theta() - direct).norm() < 1e-10);

    const Eigen::VectorXd probe = unit_sphere_vector(d, eng);
    const double want = std::clamp(direct.dot(probe), 0.0, 1.0);
    CHECK(oracle.predict(probe) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("ridge excess squared loss grows sublinearly on a realizable stream") {
    const int d = 4;
    const Eigen::VectorXd theta_star = Eigen::VectorXd::Constant(d, 0.25);  // norm 0.5

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::mt19937_64 eng(seed);
        RidgeOracle oracle(d, 1.0);
        double excess_1000 = 0.0, excess_4000 = 0.0, excess = 0.0;
        for (int t = 1; t <= 4000; ++t) {
            Eigen::VectorXd x(d);
            for (int i = 0; i < d; ++i) x[i] = uniform01(eng);
            x.normalize();
            const double clean = theta_star.dot(x);             // in [0.25, 0.5]
            const double y = clean + 0.4 * (uniform01(eng) - 0.5);  // stays inside [0, 1]
            const double pred = oracle.predict(x);
            excess += (pred - y) * (pred - y) - (clean - y) * (clean - y);
            oracle.update(x, y);
            if (t == 1000) excess_1000 = excess;
        }
        excess_4000 = excess;
        CHECK(excess_1000 > 0.0);
        CHECK(excess_4000 < 2.0 * excess_1000);
    }
}

TEST_CASE("buffered oracle defers updates and replays them in order") {
    RidgeOracle inner(2, 1.0);
    BufferedOracle buffered(inner);

    buffered.update(Eigen::Vector2d(1.0, 0.0), 1.0);
    buffered.update(Eigen::Vector2d(0.0, 1.0), 0.5);
    CHECK(buffered.pending() == 2);
    CHECK(inner.count() == 0);
    CHECK(buffered.predict(Eigen::Vector2d(1.0, 0.0)) == 0.0);  // passthrough, still fresh

    buffered.flush();
    CHECK(buffered.pending() == 0);
    CHECK(inner.count() == 2);

    RidgeOracle direct(2, 1.0);
    direct.update(Eigen::Vector2d(1.0, 0.0), 1.0);
    direct.update(Eigen::Vector2d(0.0, 1.0), 0.5);
    CHECK(inner.theta() == direct.theta());

    buffered.flush();  // idempotent when empty
    CHECK(inner.count() == 2);
}
