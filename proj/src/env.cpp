#include "bandit_lab/env.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bandit_lab/rng.hpp"

namespace bandit_lab {

double synthetic_expected_cost(EnvKind kind, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& x) {
    const double z = theta.dot(x);
    switch (kind) {
        case EnvKind::linear:
            return std::clamp(0.5 + z / 2.0, 0.0, 1.0);
        case EnvKind::nonlinear_quadratic:
            return z * z;
        case EnvKind::nonlinear_cosine:
            return (1.0 + std::cos(3.0 * z)) / 2.0;
    }
    throw std::invalid_argument("unknown environment kind");
}

SyntheticEnvironment::SyntheticEnvironment(const SyntheticEnvConfig& cfg) : cfg_(cfg) {
    if (cfg.dim < 1) throw std::invalid_argument("environment dimension must be positive");
    if (cfg.num_arms < 2) throw std::invalid_argument("need at least two arms");
    std::mt19937_64 eng(mix_seed(cfg.seed, 0));
    theta_ = unit_sphere_vector(cfg.dim, eng);
}

ContextSet SyntheticEnvironment::contexts(std::int64_t t) const {
    if (t < 1) throw std::invalid_argument("rounds are 1-based");
    std::mt19937_64 eng(mix_seed(cfg_.seed, static_cast<std::uint64_t>(t)));
    ContextSet set;
    set.vectors.reserve(cfg_.num_arms);
    for (int a = 0; a < cfg_.num_arms; ++a) set.vectors.push_back(unit_sphere_vector(cfg_.dim, eng));
    return set;
}

std::vector<double> SyntheticEnvironment::expected_costs(std::int64_t t) const {
    const ContextSet set = contexts(t);
    std::vector<double> costs(cfg_.num_arms);
    for (int a = 0; a < cfg_.num_arms; ++a)
        costs[a] = synthetic_expected_cost(cfg_.kind, theta_, set.vectors[a]);
    return costs;
}

double SyntheticEnvironment::sample_cost(std::int64_t t, int arm, double uniform_draw) const {
    if (arm < 0 || arm >= cfg_.num_arms) throw std::invalid_argument("arm out of range");
    const double h = expected_costs(t)[arm];
    if (cfg_.noise == NoiseKind::none) return h;
    return uniform_draw < h ? 1.0 : 0.0;
}

int SyntheticEnvironment::baseline_arm(std::int64_t t) const {
    if (cfg_.baseline == BaselineKind::fixed_arm) return 0;
    const std::vector<double> costs = expected_costs(t);
    int worst = 0;
    for (int a = 1; a < cfg_.num_arms; ++a)
        if (costs[a] > costs[worst]) worst = a;
    return worst;
}

double SyntheticEnvironment::declared_min_baseline_cost() const {
    // The cosine family is bounded below by its value at |<theta, x>| = 1;
    // the other two can reach 0, so no positive uniform bound exists.
    return cfg_.kind == EnvKind::nonlinear_cosine ? (1.0 + std::cos(3.0)) / 2.0 : 0.0;
}

std::unique_ptr<Environment> make_synthetic_env(const SyntheticEnvConfig& cfg) {
    return std::make_unique<SyntheticEnvironment>(cfg);
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delimiter, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r'))
            f.pop_back();
        std::size_t i = 0;
        while (i < f.size() && (f[i] == ' ' || f[i] == '\t')) ++i;
        f.erase(0, i);
    }
    return out;
}

[[noreturn]] void dataset_error(std::int64_t line_no, const std::string& what) {
    throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

MulticlassDataset load_dataset(const std::string& path, const DatasetSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");

    std::string line;
    std::int64_t line_no = 0;
    std::size_t label_index = 0;
    std::size_t num_columns = 0;
    bool columns_known = false;

    if (schema.has_header) {
        if (!std::getline(in, line)) throw std::runtime_error("dataset '" + path + "' is empty");
        ++line_no;
        const auto header = split_line(line, schema.delimiter);
        num_columns = header.size();
        columns_known = true;
        auto it = std::find(header.begin(), header.end(), schema.label_column);
        if (it != header.end()) {
            label_index = static_cast<std::size_t>(it - header.begin());
        } else {
            std::size_t idx = 0;
            auto res = std::from_chars(schema.label_column.data(),
                                       schema.label_column.data() + schema.label_column.size(), idx);
            if (res.ec != std::errc() ||
                res.ptr != schema.label_column.data() + schema.label_column.size() ||
                idx >= header.size())
                throw std::runtime_error("label column '" + schema.label_column +
                                         "' not found in header");
            label_index = idx;
        }
    } else {
        std::size_t idx = 0;
        auto res = std::from_chars(schema.label_column.data(),
                                   schema.label_column.data() + schema.label_column.size(), idx);
        if (res.ec != std::errc() ||
            res.ptr != schema.label_column.data() + schema.label_column.size())
            throw std::runtime_error("headerless datasets need a numeric label column index");
        label_index = idx;
    }

    MulticlassDataset ds;
    std::vector<std::string> label_names;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_line(line, schema.delimiter);
        if (!columns_known) {
            num_columns = fields.size();
            columns_known = true;
            if (label_index >= num_columns)
                dataset_error(line_no, "label column index out of range");
        }
        if (fields.size() != num_columns)
            dataset_error(line_no, "expected " + std::to_string(num_columns) + " fields, got " +
                                       std::to_string(fields.size()));
        Eigen::VectorXd row(static_cast<Eigen::Index>(num_columns) - 1);
        Eigen::Index fi = 0;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (c == label_index) continue;
            if (fields[c].empty()) dataset_error(line_no, "missing feature field");
            double v = 0.0;
            auto res = std::from_chars(fields[c].data(), fields[c].data() + fields[c].size(), v);
            if (res.ec != std::errc() || res.ptr != fields[c].data() + fields[c].size())
                dataset_error(line_no, "non-numeric feature '" + fields[c] + "'");
            row[fi++] = v;
        }
        const std::string& label = fields[label_index];
        if (label.empty()) dataset_error(line_no, "missing label field");
        auto it = std::find(label_names.begin(), label_names.end(), label);
        if (it == label_names.end()) {
            label_names.push_back(label);
            ds.labels.push_back(static_cast<int>(label_names.size()) - 1);
        } else {
            ds.labels.push_back(static_cast<int>(it - label_names.begin()));
        }
        ds.features.push_back(std::move(row));
    }
    if (ds.features.empty()) throw std::runtime_error("dataset '" + path + "' has no data rows");
    ds.num_classes = static_cast<int>(label_names.size());

    if (schema.normalize == NormalizeMode::per_feature) {
        const Eigen::Index d = ds.features[0].size();
        Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
        Eigen::VectorXd hi = Eigen::VectorXd::Constant(d, -std::numeric_limits<double>::infinity());
        for (const auto& row : ds.features) {
            lo = lo.cwiseMin(row);
            hi = hi.cwiseMax(row);
        }
        for (auto& row : ds.features)
            for (Eigen::Index i = 0; i < d; ++i)
                row[i] = hi[i] > lo[i] ? (row[i] - lo[i]) / (hi[i] - lo[i]) : 0.0;
    }
    double max_norm = 0.0;
    for (const auto& row : ds.features) max_norm = std::max(max_norm, row.norm());
    if (max_norm > 0.0) {
        for (auto& row : ds.features) row /= max_norm;
        ds.feature_scale = max_norm;
    }
    return ds;
}

MulticlassEnvironment::MulticlassEnvironment(MulticlassDataset dataset, int baseline_arm,
                                             std::uint64_t shuffle_seed)
    : dataset_(std::move(dataset)), baseline_arm_(baseline_arm), shuffle_seed_(shuffle_seed) {
    if (dataset_.features.empty()) throw std::invalid_argument("empty dataset");
    if (dataset_.num_classes < 2) throw std::invalid_argument("need at least two classes");
    if (baseline_arm < 0 || baseline_arm >= dataset_.num_classes)
        throw std::invalid_argument("baseline arm out of range");
}

int MulticlassEnvironment::context_dim() const {
    return static_cast<int>(dataset_.features[0].size()) * dataset_.num_classes;
}

std::size_t MulticlassEnvironment::row_at(std::int64_t t) const {
    if (t < 1) throw std::invalid_argument("rounds are 1-based");
    const std::int64_t n = static_cast<std::int64_t>(dataset_.features.size());
    const std::int64_t epoch = (t - 1) / n;
    if (epoch != cached_epoch_) {
        cached_perm_.resize(dataset_.features.size());
        std::iota(cached_perm_.begin(), cached_perm_.end(), std::size_t{0});
        std::mt19937_64 eng(mix_seed(shuffle_seed_, static_cast<std::uint64_t>(epoch)));
        std::shuffle(cached_perm_.begin(), cached_perm_.end(), eng);
        cached_epoch_ = epoch;
    }
    return cached_perm_[static_cast<std::size_t>((t - 1) % n)];
}

ContextSet MulticlassEnvironment::contexts(std::int64_t t) const {
    const Eigen::VectorXd& row = dataset_.features[row_at(t)];
    const Eigen::Index d = row.size();
    ContextSet set;
    set.vectors.reserve(dataset_.num_classes);
    for (int k = 0; k < dataset_.num_classes; ++k) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(d * dataset_.num_classes);
        x.segment(k * d, d) = row;
        set.vectors.push_back(std::move(x));
    }
    return set;
}

std::vector<double> MulticlassEnvironment::expected_costs(std::int64_t t) const {
    const int label = dataset_.labels[row_at(t)];
    std::vector<double> costs(dataset_.num_classes, 1.0);
    costs[label] = 0.01;
    return costs;
}

double MulticlassEnvironment::sample_cost(std::int64_t t, int arm, double uniform_draw) const {
    (void)uniform_draw;  // costs are deterministic
    if (arm < 0 || arm >= dataset_.num_classes) throw std::invalid_argument("arm out of range");
    return expected_costs(t)[arm];
}

std::unique_ptr<Environment> make_multiclass_env(MulticlassDataset dataset, int baseline_arm,
                                                 std::uint64_t shuffle_seed) {
    return std::make_unique<MulticlassEnvironment>(std::move(dataset), baseline_arm, shuffle_seed);
}

EnvironmentAudit audit_environment(const Environment& env, std::int64_t horizon) {
    if (horizon < 1) throw std::invalid_argument("audit horizon must be positive");
    EnvironmentAudit audit;
    audit.min_baseline_cost = std::numeric_limits<double>::infinity();
    audit.min_baseline_gap = std::numeric_limits<double>::infinity();
    for (std::int64_t t = 1; t <= horizon; ++t) {
        const std::vector<double> costs = env.expected_costs(t);
        const double h_b = costs[env.baseline_arm(t)];
        const double h_opt = *std::min_element(costs.begin(), costs.end());
        audit.min_baseline_cost = std::min(audit.min_baseline_cost, h_b);
        audit.min_baseline_gap = std::min(audit.min_baseline_gap, h_b - h_opt);
    }
    return audit;
}

}  // namespace bandit_lab
