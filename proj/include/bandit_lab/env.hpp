#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bandit_lab/core_types.hpp"

// Cost environments: synthetic realizable families and the multiclass-to-
// bandit transform. Everything is a pure function of (config, seed, round),
// so a run can regenerate any round's data on demand.

namespace bandit_lab {

class Environment {
public:
    virtual ~Environment() = default;

    virtual int num_arms() const = 0;
    virtual int context_dim() const = 0;

    // Rounds are 1-based throughout.
    virtual ContextSet contexts(std::int64_t t) const = 0;
    virtual std::vector<double> expected_costs(std::int64_t t) const = 0;
    virtual double sample_cost(std::int64_t t, int arm, double uniform_draw) const = 0;
    virtual int baseline_arm(std::int64_t t) const = 0;

    // Guaranteed lower bound on every round's baseline expected cost, or 0
    // when the family admits no positive uniform bound (see the audit).
    virtual double declared_min_baseline_cost() const = 0;

    double baseline_expected_cost(std::int64_t t) const {
        return expected_costs(t)[baseline_arm(t)];
    }
};

enum class EnvKind { linear, nonlinear_quadratic, nonlinear_cosine };
enum class NoiseKind { bernoulli, none };
enum class BaselineKind { fixed_arm, fixed_suboptimal_policy };

struct SyntheticEnvConfig {
    EnvKind kind = EnvKind::linear;
    int dim = 10;
    int num_arms = 5;
    NoiseKind noise = NoiseKind::none;
    BaselineKind baseline = BaselineKind::fixed_arm;
    std::uint64_t seed = 0;
};

// The true cost given the hidden direction theta:
//   linear:    clamp(0.5 + <theta, x> / 2, 0, 1)
//   quadratic: <theta, x>^2
//   cosine:    (1 + cos(3 <theta, x>)) / 2
double synthetic_expected_cost(EnvKind kind, const Eigen::VectorXd& theta, const Eigen::VectorXd& x);

// Contexts are i.i.d. uniform on the unit sphere, fresh per arm per round.
// Bernoulli noise draws the observed cost as 1 with probability h(x), else
// 0; noiseless environments return h(x) itself. fixed_arm baselines always
// play arm 0; fixed_suboptimal_policy plays the round's worst arm.
class SyntheticEnvironment : public Environment {
public:
    explicit SyntheticEnvironment(const SyntheticEnvConfig& cfg);

    int num_arms() const override { return cfg_.num_arms; }
    int context_dim() const override { return cfg_.dim; }
    ContextSet contexts(std::int64_t t) const override;
    std::vector<double> expected_costs(std::int64_t t) const override;
    double sample_cost(std::int64_t t, int arm, double uniform_draw) const override;
    int baseline_arm(std::int64_t t) const override;
    double declared_min_baseline_cost() const override;

    const Eigen::VectorXd& theta_star() const { return theta_; }

private:
    SyntheticEnvConfig cfg_;
    Eigen::VectorXd theta_;
};

std::unique_ptr<Environment> make_synthetic_env(const SyntheticEnvConfig& cfg);

struct MulticlassDataset {
    std::vector<Eigen::VectorXd> features;
    std::vector<int> labels;      // 0-based, mapped in first-appearance order
    int num_classes = 0;
    double feature_scale = 1.0;   // divisor applied to raw rows
};

enum class NormalizeMode { unit_ball, per_feature };

struct DatasetSchema {
    std::string label_column = "label";  // header name, or 0-based index when headerless
    char delimiter = ',';
    bool has_header = true;
    NormalizeMode normalize = NormalizeMode::unit_ball;
};

// Parse a delimited text file into features plus labels. unit_ball divides
// every row by the largest row norm; per_feature first min-max scales each
// column to [0, 1], then applies the same row scaling. Throws
// std::runtime_error naming the offending line on malformed input.
MulticlassDataset load_dataset(const std::string& path, const DatasetSchema& schema);

// One-vs-all transform: round t presents K block contexts of dimension d*K,
// where context k carries the row's features in block k and zeros
// elsewhere. The arm matching the label costs 0.01, every other arm 1, with
// no noise. Rows are visited in a shuffled order, reshuffled each epoch.
class MulticlassEnvironment : public Environment {
public:
    MulticlassEnvironment(MulticlassDataset dataset, int baseline_arm, std::uint64_t shuffle_seed);

    int num_arms() const override { return dataset_.num_classes; }
    int context_dim() const override;
    ContextSet contexts(std::int64_t t) const override;
    std::vector<double> expected_costs(std::int64_t t) const override;
    double sample_cost(std::int64_t t, int arm, double uniform_draw) const override;
    int baseline_arm(std::int64_t) const override { return baseline_arm_; }
    double declared_min_baseline_cost() const override { return 0.01; }

    // The dataset row index presented at round t.
    std::size_t row_at(std::int64_t t) const;

private:
    MulticlassDataset dataset_;
    int baseline_arm_;
    std::uint64_t shuffle_seed_;
    mutable std::int64_t cached_epoch_ = -1;
    mutable std::vector<std::size_t> cached_perm_;
};

std::unique_ptr<Environment> make_multiclass_env(MulticlassDataset dataset, int baseline_arm,
                                                 std::uint64_t shuffle_seed);

// Empirical scan over the first `horizon` rounds: the smallest baseline
// expected cost seen and the smallest baseline-minus-optimal gap.
struct EnvironmentAudit {
    double min_baseline_cost = 0.0;
    double min_baseline_gap = 0.0;
};
EnvironmentAudit audit_environment(const Environment& env, std::int64_t horizon);

}  // namespace bandit_lab
