#pragma once

#include <vector>

// Inverse-gap-weighting action distributions. Two variants: the squared-loss
// form 1 / (K + gamma * gap), and the multiplicative form used with log-loss
// oracles, yhat_z / (K * yhat_z + gamma * gap). Both put all leftover mass on
// the greedy arm.

namespace bandit_lab {

struct ActionDistribution {
    std::vector<double> probs;  // sums to 1 within 1e-12
    int greedy_arm = 0;         // first index attaining the minimum prediction
};

// predictions: K >= 2 finite entries in [0, 1]; gamma > 0 finite.
// probs[a] = 1 / (K + gamma * (yhat_a - yhat_min)) for non-greedy a, and the
// greedy arm receives 1 - sum(others). Ties on the minimum get the plain
// 1/K weight each (zero gap), so an all-tied input is uniform up to the
// rounding in the greedy remainder.
// Throws std::invalid_argument on malformed inputs.
ActionDistribution igw_square(const std::vector<double>& predictions, double gamma);

// predictions: K >= 2 finite entries strictly inside (0, 1) (callers clamp
// first, see the oracle module); gamma > 0 finite.
// probs[k] = yhat_z / (K * yhat_z + gamma * (yhat_k - yhat_z)) for k != z.
// Zero gaps short-circuit to 1/K instead of dividing one tiny prediction by
// another, so clamp-floor ties still get the plain uniform weight.
ActionDistribution igw_kl(const std::vector<double>& predictions, double gamma);

// Inverse-CDF sampling in index order: returns the smallest arm a such that
// uniform_draw < probs[0] + ... + probs[a]. uniform_draw must lie in [0, 1);
// a draw beyond the accumulated mass (possible when the probabilities sum
// slightly below 1) falls through to the last arm.
int sample_arm(const ActionDistribution& dist, double uniform_draw);

}  // namespace bandit_lab
