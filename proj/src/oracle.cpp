#include "bandit_lab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bandit_lab {

double regret_budget(RegretBudgetKind kind, double coefficient, std::int64_t T) {
    if (!(std::isfinite(coefficient) && coefficient > 0.0))
        throw std::invalid_argument("regret budget coefficient must be positive");
    if (T < 0) throw std::invalid_argument("horizon must be nonnegative");
    switch (kind) {
        case RegretBudgetKind::constant:
            return std::max(1.0, coefficient);
        case RegretBudgetKind::c_log_T:
            return std::max(1.0, coefficient * std::log(static_cast<double>(T) + 1.0));
    }
    throw std::invalid_argument("unknown regret budget kind");
}

double kl_clamp(double y_hat) {
    if (!std::isfinite(y_hat)) throw std::invalid_argument("prediction is not finite");
    return std::clamp(y_hat, kl_eps, 1.0 - kl_eps);
}

double kl_loss(double q, double y) {
    double loss = 0.0;
    if (y > 0.0) loss += y * std::log(y / q);
    if (y < 1.0) loss += (1.0 - y) * std::log((1.0 - y) / (1.0 - q));
    return loss;
}

RidgeOracle::RidgeOracle(int dim, double lambda) : lambda_(lambda) {
    if (dim < 1) throw std::invalid_argument("ridge dimension must be positive");
    if (!(std::isfinite(lambda) && lambda > 0.0))
        throw std::invalid_argument("ridge lambda must be positive");
    gram_ = lambda * Eigen::MatrixXd::Identity(dim, dim);
    moment_ = Eigen::VectorXd::Zero(dim);
    theta_ = Eigen::VectorXd::Zero(dim);
    llt_.compute(gram_);
}

double RidgeOracle::predict(const Eigen::VectorXd& x) const {
    if (x.size() != theta_.size()) throw std::invalid_argument("ridge predict dimension mismatch");
    return std::clamp(theta_.dot(x), 0.0, 1.0);
}

void RidgeOracle::update(const Eigen::VectorXd& x, double y) {
    if (x.size() != theta_.size()) throw std::invalid_argument("ridge update dimension mismatch");
    if (!(std::isfinite(y) && y >= 0.0 && y <= 1.0))
        throw std::invalid_argument("ridge target outside [0, 1]");
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0);
    gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
    llt_.rankUpdate(x, 1.0);
    moment_ += y * x;
    theta_ = llt_.solve(moment_);
    ++count_;
}

void BufferedOracle::flush() {
    while (!pending_.empty()) {
        auto& [x, y] = pending_.front();
        inner_->update(x, y);
        pending_.pop_front();
    }
}

}  // namespace bandit_lab
