#pragma once

#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bandit_lab/core_types.hpp"

// Online regression oracles: the black-box predictors the bandit algorithms
// train on (context, cost) pairs. The contract is deliberately tiny so ridge
// and the neural ensemble are interchangeable.

namespace bandit_lab {

// Predictions always land in [0, 1]. update() may only be called by one
// thread at a time; predict() is safe to call concurrently between updates.
class RegressionOracle {
public:
    virtual ~RegressionOracle() = default;
    virtual double predict(const Eigen::VectorXd& x) const = 0;
    virtual void update(const Eigen::VectorXd& x, double y) = 0;
};

// Heuristic cap on the oracle's cumulative excess loss after T rounds, used
// by the safety gate and the exploration rate. Floored at 1, nondecreasing
// in T. Throws std::invalid_argument on coefficient <= 0 or T < 0.
double regret_budget(RegretBudgetKind kind, double coefficient, std::int64_t T);

inline constexpr double kl_eps = 1e-6;

// Clamp a prediction into [kl_eps, 1 - kl_eps] so the log loss below stays
// finite. Idempotent and order-preserving. Throws on non-finite input.
double kl_clamp(double y_hat);

// Binary relative entropy between y and the prediction q, with the usual
// 0 log 0 = 0 convention. Finite whenever q is strictly inside (0, 1).
double kl_loss(double q, double y);

// Exact ridge regression: theta = (lambda I + sum x x^T)^{-1} (sum y x),
// prediction clamp(<theta, x>, 0, 1). The Cholesky factor is maintained by
// rank-one updates so both predict and update cost O(d^2).
class RidgeOracle : public RegressionOracle {
public:
    RidgeOracle(int dim, double lambda);

    double predict(const Eigen::VectorXd& x) const override;
    void update(const Eigen::VectorXd& x, double y) override;

    const Eigen::MatrixXd& gram() const { return gram_; }
    const Eigen::VectorXd& moment() const { return moment_; }
    const Eigen::VectorXd& theta() const { return theta_; }
    double lambda_reg() const { return lambda_; }
    std::int64_t count() const { return count_; }

private:
    double lambda_;
    Eigen::MatrixXd gram_;
    Eigen::VectorXd moment_;
    Eigen::VectorXd theta_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    std::int64_t count_ = 0;
};

// Defers updates so the underlying model is retrained in batches (the
// harness flushes every update_every rounds). Buffered pairs are applied to
// the inner oracle in arrival order, each exactly once.
class BufferedOracle : public RegressionOracle {
public:
    explicit BufferedOracle(RegressionOracle& inner) : inner_(&inner) {}

    double predict(const Eigen::VectorXd& x) const override { return inner_->predict(x); }
    void update(const Eigen::VectorXd& x, double y) override { pending_.emplace_back(x, y); }

    void flush();
    std::size_t pending() const { return pending_.size(); }

private:
    RegressionOracle* inner_;
    std::deque<std::pair<Eigen::VectorXd, double>> pending_;
};

}  // namespace bandit_lab
