#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "bandit_lab/oracle.hpp"

// Feed-forward network trained by projected online gradient descent, plus
// the perturbed-ensemble predictor built on top of it. The network is
//   f(theta; x) = m^{-1/2} v^T phi(m^{-1/2} W_L phi(... phi(m^{-1/2} W_1 x)))
// with the m^{-1/2} factor applied at every layer. Each ensemble member adds
// a fixed random linear functional of the displacement theta - theta0.

namespace bandit_lab {

enum class Activation { tanh_act, relu };
enum class LossKind { square, kl };

struct NetworkConfig {
    int depth = 2;      // hidden layers L
    int width = 64;     // units per hidden layer m
    int input_dim = 0;  // d
    double sigma1 = 1.0;
    double c_p = 0.1;       // perturbation magnitude
    int ensemble_size = 8;  // S
    double rho = 1.0;       // hidden-layer displacement radius
    double rho1 = 1.0;      // output-vector displacement radius
    Activation activation = Activation::tanh_act;
    LossKind loss_kind = LossKind::square;
};

// Throws std::invalid_argument on nonpositive dims/scales or rho <= 0.
void validate_network_config(const NetworkConfig& cfg);

// Weights as matrices; the flat parameter order used by perturbations and
// checkpoints is vec(W_1), ..., vec(W_L), v with column-major vec.
struct NetworkParams {
    std::vector<Eigen::MatrixXd> layers;  // W_1 is width x d, the rest width x width
    Eigen::VectorXd v;

    Eigen::Index param_count() const;
};

// One seed per ensemble member; each expands deterministically to a
// Rademacher sign vector over the flat parameter space.
struct PerturbationSeeds {
    std::vector<std::uint64_t> seeds;
};

// Initialization scale sigma1 / (2 (1 + sqrt(ln m) / sqrt(2m))).
double sigma0_from(double sigma1, int width);

struct InitResult {
    NetworkParams params;
    PerturbationSeeds seeds;
};

// Hidden weights i.i.d. N(0, sigma0^2), v uniform on the unit sphere.
// Bit-identical for equal (config, seed).
InitResult init_params(const NetworkConfig& cfg, std::uint64_t seed);

// Raw network output, unclamped. Throws on input dimension mismatch.
double forward(const NetworkConfig& cfg, const NetworkParams& params, const Eigen::VectorXd& x);

// forward(params, x) + c_p * <params - anchor, eps> / width^{1/4}.
// eps must have param_count entries.
double perturbed_forward(const NetworkConfig& cfg, const NetworkParams& params,
                         const NetworkParams& anchor, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& eps);

// Per-member offsets c_p * <params - anchor, eps_s> / width^{1/4}. These do
// not depend on x, so one computation serves a whole round of predictions.
std::vector<double> perturbation_shifts(const NetworkConfig& cfg, const NetworkParams& params,
                                        const NetworkParams& anchor, const PerturbationSeeds& seeds);

// Ensemble prediction: mean over members of the perturbed output (square
// loss, unclamped here; the oracle adapter clamps) or of its sigmoid (kl).
double ensemble_forward(const NetworkConfig& cfg, const NetworkParams& params,
                        const NetworkParams& anchor, const Eigen::VectorXd& x,
                        const PerturbationSeeds& seeds);

struct LossGradient {
    double loss = 0.0;
    NetworkParams gradient;  // same shapes as the parameters
};

// Loss averaged over ensemble members and its exact gradient in theta.
// Square: mean of (member - y)^2 on raw outputs. kl: mean of the log loss on
// sigmoid(member). Each member's gradient is its backpropagated network
// gradient plus c_p eps_s / width^{1/4}. Throws on y outside [0, 1].
LossGradient loss_and_gradient(const NetworkConfig& cfg, const NetworkParams& params,
                               const NetworkParams& anchor, const Eigen::VectorXd& x, double y,
                               const PerturbationSeeds& seeds);

// Radially project each layer's displacement from the anchor onto the ball
// of radius rho (rho1 for v). Layers already inside are left untouched, so
// the projection is bitwise idempotent.
void project_frobenius(NetworkParams& params, const NetworkParams& anchor, double rho, double rho1);

// theta <- project(theta - step_size * gradient). Throws std::runtime_error
// on non-finite gradient entries (a diverged run must abort, not limp on).
void ogd_step(NetworkParams& params, const LossGradient& grad, double step_size,
              const NetworkParams& anchor, double rho, double rho1);

// Plain-text checkpoint: config header plus full-precision parameters and
// perturbation seeds. load restores bit-identical state.
void save_checkpoint(std::ostream& out, const NetworkConfig& cfg, const NetworkParams& params,
                     const PerturbationSeeds& seeds);
struct Checkpoint {
    NetworkConfig cfg;
    NetworkParams params;
    PerturbationSeeds seeds;
};
Checkpoint load_checkpoint(std::istream& in);

// RegressionOracle adapter: predict runs the ensemble (clamped to [0, 1] for
// square loss, kl-clamped for kl), update takes one projected OGD step.
// Perturbation shifts are cached and refreshed after each update, keeping
// predict const and cheap.
class NeuralOracle : public RegressionOracle {
public:
    NeuralOracle(const NetworkConfig& cfg, std::uint64_t seed, double step_size);

    double predict(const Eigen::VectorXd& x) const override;
    void update(const Eigen::VectorXd& x, double y) override;

    const NetworkConfig& config() const { return cfg_; }
    const NetworkParams& params() const { return params_; }
    const NetworkParams& anchor() const { return anchor_; }
    const PerturbationSeeds& seeds() const { return seeds_; }

private:
    NetworkConfig cfg_;
    NetworkParams params_;
    NetworkParams anchor_;
    PerturbationSeeds seeds_;
    double step_size_;
    std::vector<double> shifts_;
};

}  // namespace bandit_lab
