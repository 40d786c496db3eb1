#include "bandit_lab/igw.hpp"

#include <cmath>
#include <stdexcept>

namespace bandit_lab {

namespace {

int validate_common(const std::vector<double>& predictions, double gamma, double lo, double hi,
                    bool open_interval) {
    const int k = static_cast<int>(predictions.size());
    if (k < 2) throw std::invalid_argument("need at least two arms");
    if (!(std::isfinite(gamma) && gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    for (double p : predictions) {
        if (!std::isfinite(p)) throw std::invalid_argument("prediction is not finite");
        if (open_interval ? (p <= lo || p >= hi) : (p < lo || p > hi))
            throw std::invalid_argument("prediction outside the allowed range");
    }
    int greedy = 0;
    for (int a = 1; a < k; ++a)
        if (predictions[a] < predictions[greedy]) greedy = a;
    return greedy;
}

ActionDistribution finish(std::vector<double> probs, int greedy, double sum_others) {
    const double leftover = 1.0 - sum_others;
    if (leftover < -1e-12) throw std::logic_error("inverse-gap weights overflow the simplex");
    probs[greedy] = std::max(leftover, 0.0);
    return ActionDistribution{std::move(probs), greedy};
}

}  // namespace

ActionDistribution igw_square(const std::vector<double>& predictions, double gamma) {
    const int greedy = validate_common(predictions, gamma, 0.0, 1.0, false);
    const int k = static_cast<int>(predictions.size());
    std::vector<double> probs(k, 0.0);
    double sum_others = 0.0;
    for (int a = 0; a < k; ++a) {
        if (a == greedy) continue;
        probs[a] = 1.0 / (k + gamma * (predictions[a] - predictions[greedy]));
        sum_others += probs[a];
    }
    return finish(std::move(probs), greedy, sum_others);
}

ActionDistribution igw_kl(const std::vector<double>& predictions, double gamma) {
    const int greedy = validate_common(predictions, gamma, 0.0, 1.0, true);
    const int k = static_cast<int>(predictions.size());
    const double y_greedy = predictions[greedy];
    std::vector<double> probs(k, 0.0);
    double sum_others = 0.0;
    for (int a = 0; a < k; ++a) {
        if (a == greedy) continue;
        const double gap = predictions[a] - y_greedy;
        probs[a] = gap == 0.0 ? 1.0 / k : y_greedy / (k * y_greedy + gamma * gap);
        sum_others += probs[a];
    }
    return finish(std::move(probs), greedy, sum_others);
}

int sample_arm(const ActionDistribution& dist, double uniform_draw) {
    if (!(uniform_draw >= 0.0 && uniform_draw < 1.0))
        throw std::invalid_argument("uniform draw must lie in [0, 1)");
    if (dist.probs.empty()) throw std::invalid_argument("empty distribution");
    double cum = 0.0;
    const int k = static_cast<int>(dist.probs.size());
    for (int a = 0; a < k; ++a) {
        cum += dist.probs[a];
        if (uniform_draw < cum) return a;
    }
    return k - 1;
}

}  // namespace bandit_lab
