#include "bandit_lab/neural.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "bandit_lab/rng.hpp"

namespace bandit_lab {

namespace {

double activate(Activation act, double z) {
    return act == Activation::tanh_act ? std::tanh(z) : std::max(0.0, z);
}

double activate_grad(Activation act, double z) {
    if (act == Activation::tanh_act) {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    return z > 0.0 ? 1.0 : 0.0;
}

// Flat parameter order: vec(W_1), ..., vec(W_L), v, column-major.
Eigen::VectorXd flatten_displacement(const NetworkParams& params, const NetworkParams& anchor) {
    Eigen::VectorXd out(params.param_count());
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const Eigen::Index n = params.layers[l].size();
        out.segment(offset, n) =
            Eigen::Map<const Eigen::VectorXd>(params.layers[l].data(), n) -
            Eigen::Map<const Eigen::VectorXd>(anchor.layers[l].data(), n);
        offset += n;
    }
    out.segment(offset, params.v.size()) = params.v - anchor.v;
    return out;
}

void add_flat(NetworkParams& target, const Eigen::VectorXd& flat, double scale) {
    Eigen::Index offset = 0;
    for (auto& layer : target.layers) {
        Eigen::Map<Eigen::VectorXd>(layer.data(), layer.size()) +=
            scale * flat.segment(offset, layer.size());
        offset += layer.size();
    }
    target.v += scale * flat.segment(offset, target.v.size());
}

struct ForwardPass {
    std::vector<Eigen::VectorXd> pre;     // pre-activations per hidden layer
    std::vector<Eigen::VectorXd> hidden;  // activations per hidden layer
    double output = 0.0;
};

ForwardPass run_forward(const NetworkConfig& cfg, const NetworkParams& params,
                        const Eigen::VectorXd& x) {
    if (x.size() != cfg.input_dim) throw std::invalid_argument("network input dimension mismatch");
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.width));
    ForwardPass pass;
    pass.pre.reserve(params.layers.size());
    pass.hidden.reserve(params.layers.size());
    const Eigen::VectorXd* h = &x;
    for (const auto& w : params.layers) {
        pass.pre.push_back(scale * (w * (*h)));
        Eigen::VectorXd act = pass.pre.back().unaryExpr(
            [&](double z) { return activate(cfg.activation, z); });
        pass.hidden.push_back(std::move(act));
        h = &pass.hidden.back();
    }
    pass.output = scale * params.v.dot(*h);
    return pass;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_shapes(const NetworkConfig& cfg, const NetworkParams& params) {
    if (static_cast<int>(params.layers.size()) != cfg.depth)
        throw std::invalid_argument("parameter depth mismatch");
    for (int l = 0; l < cfg.depth; ++l) {
        const Eigen::Index cols = l == 0 ? cfg.input_dim : cfg.width;
        if (params.layers[l].rows() != cfg.width || params.layers[l].cols() != cols)
            throw std::invalid_argument("layer shape mismatch");
    }
    if (params.v.size() != cfg.width) throw std::invalid_argument("output vector size mismatch");
}

}  // namespace

void validate_network_config(const NetworkConfig& cfg) {
    if (cfg.depth < 1) throw std::invalid_argument("network depth must be positive");
    if (cfg.width < 1) throw std::invalid_argument("network width must be positive");
    if (cfg.input_dim < 1) throw std::invalid_argument("network input_dim must be positive");
    if (!(std::isfinite(cfg.sigma1) && cfg.sigma1 > 0.0))
        throw std::invalid_argument("sigma1 must be positive");
    if (!(std::isfinite(cfg.c_p) && cfg.c_p >= 0.0))
        throw std::invalid_argument("c_p must be nonnegative");
    if (cfg.ensemble_size < 1) throw std::invalid_argument("ensemble size must be positive");
    if (!(std::isfinite(cfg.rho) && cfg.rho > 0.0)) throw std::invalid_argument("rho must be positive");
    if (!(std::isfinite(cfg.rho1) && cfg.rho1 > 0.0))
        throw std::invalid_argument("rho1 must be positive");
}

Eigen::Index NetworkParams::param_count() const {
    Eigen::Index p = v.size();
    for (const auto& w : layers) p += w.size();
    return p;
}

double sigma0_from(double sigma1, int width) {
    const double m = static_cast<double>(width);
    return sigma1 / (2.0 * (1.0 + std::sqrt(std::log(m)) / std::sqrt(2.0 * m)));
}

InitResult init_params(const NetworkConfig& cfg, std::uint64_t seed) {
    validate_network_config(cfg);
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> gauss(0.0, sigma0_from(cfg.sigma1, cfg.width));
    InitResult out;
    out.params.layers.reserve(cfg.depth);
    for (int l = 0; l < cfg.depth; ++l) {
        const Eigen::Index cols = l == 0 ? cfg.input_dim : cfg.width;
        Eigen::MatrixXd w(cfg.width, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < cfg.width; ++i) w(i, j) = gauss(eng);
        out.params.layers.push_back(std::move(w));
    }
    out.params.v = unit_sphere_vector(cfg.width, eng);
    out.seeds.seeds.resize(cfg.ensemble_size);
    for (auto& s : out.seeds.seeds) s = eng();
    return out;
}

double forward(const NetworkConfig& cfg, const NetworkParams& params, const Eigen::VectorXd& x) {
    check_shapes(cfg, params);
    return run_forward(cfg, params, x).output;
}

double perturbed_forward(const NetworkConfig& cfg, const NetworkParams& params,
                         const NetworkParams& anchor, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& eps) {
    if (eps.size() != params.param_count())
        throw std::invalid_argument("perturbation vector length mismatch");
    const Eigen::VectorXd disp = flatten_displacement(params, anchor);
    const double shift = cfg.c_p * disp.dot(eps) / std::pow(static_cast<double>(cfg.width), 0.25);
    return forward(cfg, params, x) + shift;
}

std::vector<double> perturbation_shifts(const NetworkConfig& cfg, const NetworkParams& params,
                                        const NetworkParams& anchor,
                                        const PerturbationSeeds& seeds) {
    std::vector<double> shifts(seeds.seeds.size(), 0.0);
    if (cfg.c_p == 0.0) return shifts;
    const Eigen::VectorXd disp = flatten_displacement(params, anchor);
    Eigen::VectorXd eps(disp.size());
    const double scale = cfg.c_p / std::pow(static_cast<double>(cfg.width), 0.25);
    for (std::size_t s = 0; s < seeds.seeds.size(); ++s) {
        fill_rademacher(seeds.seeds[s], eps);
        shifts[s] = scale * disp.dot(eps);
    }
    return shifts;
}

namespace {

double ensemble_from_shifts(LossKind kind, double base_output, const std::vector<double>& shifts) {
    double sum = 0.0;
    for (double shift : shifts) {
        const double member = base_output + shift;
        sum += kind == LossKind::kl ? sigmoid(member) : member;
    }
    return sum / static_cast<double>(shifts.size());
}

}  // namespace

double ensemble_forward(const NetworkConfig& cfg, const NetworkParams& params,
                        const NetworkParams& anchor, const Eigen::VectorXd& x,
                        const PerturbationSeeds& seeds) {
    if (seeds.seeds.empty()) throw std::invalid_argument("ensemble has no members");
    const double base = forward(cfg, params, x);
    return ensemble_from_shifts(cfg.loss_kind, base, perturbation_shifts(cfg, params, anchor, seeds));
}

LossGradient loss_and_gradient(const NetworkConfig& cfg, const NetworkParams& params,
                               const NetworkParams& anchor, const Eigen::VectorXd& x, double y,
                               const PerturbationSeeds& seeds) {
    if (!(std::isfinite(y) && y >= 0.0 && y <= 1.0))
        throw std::invalid_argument("target outside [0, 1]");
    if (seeds.seeds.empty()) throw std::invalid_argument("ensemble has no members");
    check_shapes(cfg, params);

    const ForwardPass pass = run_forward(cfg, params, x);
    const auto shifts = perturbation_shifts(cfg, params, anchor, seeds);
    const double inv_s = 1.0 / static_cast<double>(seeds.seeds.size());

    // Per-member chain weights: d(member loss)/d(member output), averaged.
    LossGradient out;
    double net_weight = 0.0;
    std::vector<double> member_weight(shifts.size(), 0.0);
    for (std::size_t s = 0; s < shifts.size(); ++s) {
        const double member = pass.output + shifts[s];
        if (cfg.loss_kind == LossKind::square) {
            const double residual = member - y;
            out.loss += inv_s * residual * residual;
            member_weight[s] = inv_s * 2.0 * residual;
        } else {
            const double q = sigmoid(member);
            out.loss += inv_s * kl_loss(std::clamp(q, 1e-15, 1.0 - 1e-15), y);
            member_weight[s] = inv_s * (q - y);
        }
        net_weight += member_weight[s];
    }

    // Backprop the shared network part once, scaled by the summed weight.
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.width));
    out.gradient.layers.resize(params.layers.size());
    out.gradient.v = (net_weight * scale) * pass.hidden.back();
    Eigen::VectorXd delta = (net_weight * scale) * params.v;
    for (int l = cfg.depth - 1; l >= 0; --l) {
        delta.array() *= pass.pre[l]
                             .unaryExpr([&](double z) { return activate_grad(cfg.activation, z); })
                             .array();
        const Eigen::VectorXd& below = l == 0 ? x : pass.hidden[l - 1];
        out.gradient.layers[l].noalias() = (scale * delta) * below.transpose();
        if (l > 0) delta = scale * (params.layers[l].transpose() * delta);
    }

    // Perturbation part: each member adds c_p eps_s / m^{1/4} times its weight.
    if (cfg.c_p != 0.0) {
        Eigen::VectorXd eps(params.param_count());
        Eigen::VectorXd pert = Eigen::VectorXd::Zero(params.param_count());
        for (std::size_t s = 0; s < shifts.size(); ++s) {
            fill_rademacher(seeds.seeds[s], eps);
            pert += member_weight[s] * eps;
        }
        add_flat(out.gradient, pert, cfg.c_p / std::pow(static_cast<double>(cfg.width), 0.25));
    }
    return out;
}

void project_frobenius(NetworkParams& params, const NetworkParams& anchor, double rho,
                       double rho1) {
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const Eigen::MatrixXd disp = params.layers[l] - anchor.layers[l];
        const double norm = disp.norm();
        if (norm > rho * (1.0 + 1e-12))
            params.layers[l] = anchor.layers[l] + (rho / norm) * disp;
    }
    const Eigen::VectorXd disp_v = params.v - anchor.v;
    const double norm_v = disp_v.norm();
    if (norm_v > rho1 * (1.0 + 1e-12)) params.v = anchor.v + (rho1 / norm_v) * disp_v;
}

void ogd_step(NetworkParams& params, const LossGradient& grad, double step_size,
              const NetworkParams& anchor, double rho, double rho1) {
    if (!(std::isfinite(step_size) && step_size > 0.0))
        throw std::invalid_argument("step size must be positive");
    for (const auto& g : grad.gradient.layers)
        if (!g.allFinite()) throw std::runtime_error("gradient diverged (non-finite layer entries)");
    if (!grad.gradient.v.allFinite())
        throw std::runtime_error("gradient diverged (non-finite output entries)");
    for (std::size_t l = 0; l < params.layers.size(); ++l)
        params.layers[l] -= step_size * grad.gradient.layers[l];
    params.v -= step_size * grad.gradient.v;
    project_frobenius(params, anchor, rho, rho1);
}

void save_checkpoint(std::ostream& out, const NetworkConfig& cfg, const NetworkParams& params,
                     const PerturbationSeeds& seeds) {
    out << "bandit_lab_network 1\n";
    out << cfg.depth << ' ' << cfg.width << ' ' << cfg.input_dim << ' '
        << format_double(cfg.sigma1) << ' ' << format_double(cfg.c_p) << ' ' << cfg.ensemble_size
        << ' ' << format_double(cfg.rho) << ' ' << format_double(cfg.rho1) << ' '
        << (cfg.activation == Activation::tanh_act ? "tanh" : "relu") << ' '
        << (cfg.loss_kind == LossKind::square ? "square" : "kl") << '\n';
    for (auto s : seeds.seeds) out << s << ' ';
    out << '\n';
    for (const auto& w : params.layers) {
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) out << format_double(w(i, j)) << '\n';
    }
    for (Eigen::Index i = 0; i < params.v.size(); ++i) out << format_double(params.v[i]) << '\n';
}

Checkpoint load_checkpoint(std::istream& in) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "bandit_lab_network" || version != 1)
        throw std::runtime_error("not a network checkpoint");
    Checkpoint ck;
    std::string activation, loss_kind;
    in >> ck.cfg.depth >> ck.cfg.width >> ck.cfg.input_dim >> ck.cfg.sigma1 >> ck.cfg.c_p >>
        ck.cfg.ensemble_size >> ck.cfg.rho >> ck.cfg.rho1 >> activation >> loss_kind;
    if (activation == "tanh")
        ck.cfg.activation = Activation::tanh_act;
    else if (activation == "relu")
        ck.cfg.activation = Activation::relu;
    else
        throw std::runtime_error("unknown activation in checkpoint");
    if (loss_kind == "square")
        ck.cfg.loss_kind = LossKind::square;
    else if (loss_kind == "kl")
        ck.cfg.loss_kind = LossKind::kl;
    else
        throw std::runtime_error("unknown loss kind in checkpoint");
    validate_network_config(ck.cfg);
    ck.seeds.seeds.resize(ck.cfg.ensemble_size);
    for (auto& s : ck.seeds.seeds) in >> s;
    ck.params.layers.reserve(ck.cfg.depth);
    for (int l = 0; l < ck.cfg.depth; ++l) {
        const Eigen::Index cols = l == 0 ? ck.cfg.input_dim : ck.cfg.width;
        Eigen::MatrixXd w(ck.cfg.width, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < ck.cfg.width; ++i) in >> w(i, j);
        ck.params.layers.push_back(std::move(w));
    }
    ck.params.v.resize(ck.cfg.width);
    for (Eigen::Index i = 0; i < ck.cfg.width; ++i) in >> ck.params.v[i];
    if (!in) throw std::runtime_error("truncated network checkpoint");
    return ck;
}

NeuralOracle::NeuralOracle(const NetworkConfig& cfg, std::uint64_t seed, double step_size)
    : cfg_(cfg), step_size_(step_size) {
    validate_network_config(cfg);
    if (!(std::isfinite(step_size) && step_size > 0.0))
        throw std::invalid_argument("step size must be positive");
    auto init = init_params(cfg, seed);
    params_ = init.params;
    anchor_ = init.params;
    seeds_ = std::move(init.seeds);
    shifts_ = perturbation_shifts(cfg_, params_, anchor_, seeds_);
}

double NeuralOracle::predict(const Eigen::VectorXd& x) const {
    const double base = forward(cfg_, params_, x);
    const double raw = ensemble_from_shifts(cfg_.loss_kind, base, shifts_);
    return cfg_.loss_kind == LossKind::kl ? kl_clamp(raw) : std::clamp(raw, 0.0, 1.0);
}

void NeuralOracle::update(const Eigen::VectorXd& x, double y) {
    const LossGradient grad = loss_and_gradient(cfg_, params_, anchor_, x, y, seeds_);
    ogd_step(params_, grad, step_size_, anchor_, cfg_.rho, cfg_.rho1);
    shifts_ = perturbation_shifts(cfg_, params_, anchor_, seeds_);
}

}  // namespace bandit_lab
