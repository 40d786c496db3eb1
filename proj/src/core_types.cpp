#include "bandit_lab/core_types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace bandit_lab {

namespace {

bool in_unit_interval(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

void validate_context_set(ContextSet& contexts, bool auto_normalize) {
    if (contexts.vectors.empty()) fail("context set is empty");
    const Eigen::Index d = contexts.vectors[0].size();
    if (d == 0) fail("context vectors have dimension 0");
    double max_norm = 0.0;
    for (const auto& x : contexts.vectors) {
        if (x.size() != d) fail("context vectors have mismatched dimensions");
        if (!x.allFinite()) fail("context vector has non-finite entries");
        max_norm = std::max(max_norm, x.norm());
    }
    if (auto_normalize) {
        const double scale = 1.0 / std::max(1.0, max_norm);
        if (scale != 1.0) {
            for (auto& x : contexts.vectors) x *= scale;
        }
    } else if (max_norm > 1.0 + 1e-9) {
        fail("context norm " + std::to_string(max_norm) + " exceeds the unit ball");
    }
}

void validate_round_log(const RoundLog& log, int num_arms) {
    if (num_arms < 1) fail("num_arms must be positive");
    if (log.round < 1) fail("round numbers are 1-based");
    if (log.chosen_arm < 0 || log.chosen_arm >= num_arms) fail("chosen_arm out of range");
    if (static_cast<int>(log.predictions.size()) != num_arms) fail("predictions size mismatch");
    for (double p : log.predictions)
        if (!in_unit_interval(p)) fail("prediction outside [0, 1]");
    if (log.is_baseline) {
        if (!log.distribution.empty()) fail("baseline rounds carry no distribution");
    } else {
        if (static_cast<int>(log.distribution.size()) != num_arms)
            fail("distribution size mismatch");
        double sum = 0.0;
        for (double p : log.distribution) {
            if (!in_unit_interval(p)) fail("distribution entry outside [0, 1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) fail("distribution does not sum to 1");
    }
    if (!in_unit_interval(log.observed_cost)) fail("observed_cost outside [0, 1]");
    if (!in_unit_interval(log.expected_cost_chosen)) fail("expected_cost_chosen outside [0, 1]");
    if (!in_unit_interval(log.expected_cost_optimal)) fail("expected_cost_optimal outside [0, 1]");
    if (!in_unit_interval(log.baseline_expected_cost))
        fail("baseline_expected_cost outside [0, 1]");
    if (log.expected_cost_chosen < log.expected_cost_optimal - 1e-12)
        fail("expected_cost_chosen below expected_cost_optimal");
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

std::string csv_header(int num_arms) {
    std::string h = "round,arm,is_baseline";
    for (int a = 0; a < num_arms; ++a) h += ",pred_" + std::to_string(a);
    for (int a = 0; a < num_arms; ++a) h += ",p_" + std::to_string(a);
    h += ",observed_cost,expected_cost_chosen,expected_cost_optimal,baseline_expected_cost";
    return h;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double_field(const std::string& s, std::int64_t line_no) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("line " + std::to_string(line_no) + ": bad numeric field '" + s +
                                 "'");
    return v;
}

std::int64_t parse_int_field(const std::string& s, std::int64_t line_no) {
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("line " + std::to_string(line_no) + ": bad integer field '" + s +
                                 "'");
    return v;
}

}  // namespace

void write_round_logs_csv(std::ostream& out, const std::vector<RoundLog>& logs, int num_arms) {
    out << csv_header(num_arms) << '\n';
    for (const auto& log : logs) {
        validate_round_log(log, num_arms);
        out << log.round << ',' << log.chosen_arm << ',' << (log.is_baseline ? 1 : 0);
        for (double p : log.predictions) out << ',' << format_double(p);
        if (log.is_baseline) {
            for (int a = 0; a < num_arms; ++a) out << ',';
        } else {
            for (double p : log.distribution) out << ',' << format_double(p);
        }
        out << ',' << format_double(log.observed_cost) << ','
            << format_double(log.expected_cost_chosen) << ','
            << format_double(log.expected_cost_optimal) << ','
            << format_double(log.baseline_expected_cost) << '\n';
    }
}

std::vector<RoundLog> read_round_logs_csv(std::istream& in, int& num_arms_out) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("missing CSV header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_fields(line);
    int num_arms = 0;
    for (const auto& f : header)
        if (f.rfind("pred_", 0) == 0) ++num_arms;
    if (num_arms < 1 || line != csv_header(num_arms))
        throw std::runtime_error("unrecognized CSV header: " + line);
    num_arms_out = num_arms;

    std::vector<RoundLog> logs;
    std::int64_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_fields(line);
        const std::size_t expected = 3 + 2 * static_cast<std::size_t>(num_arms) + 4;
        if (fields.size() != expected)
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(expected) + " fields, got " +
                                     std::to_string(fields.size()));
        RoundLog log;
        std::size_t i = 0;
        log.round = parse_int_field(fields[i++], line_no);
        log.chosen_arm = static_cast<int>(parse_int_field(fields[i++], line_no));
        log.is_baseline = parse_int_field(fields[i++], line_no) != 0;
        log.predictions.resize(num_arms);
        for (int a = 0; a < num_arms; ++a) log.predictions[a] = parse_double_field(fields[i++], line_no);
        if (log.is_baseline) {
            for (int a = 0; a < num_arms; ++a) {
                if (!fields[i++].empty())
                    throw std::runtime_error("line " + std::to_string(line_no) +
                                             ": baseline round has probability fields");
            }
        } else {
            log.distribution.resize(num_arms);
            for (int a = 0; a < num_arms; ++a)
                log.distribution[a] = parse_double_field(fields[i++], line_no);
        }
        log.observed_cost = parse_double_field(fields[i++], line_no);
        log.expected_cost_chosen = parse_double_field(fields[i++], line_no);
        log.expected_cost_optimal = parse_double_field(fields[i++], line_no);
        log.baseline_expected_cost = parse_double_field(fields[i++], line_no);
        validate_round_log(log, num_arms);
        logs.push_back(std::move(log));
    }
    return logs;
}

void validate_algo_config(const AlgoConfig& cfg) {
    if (!(std::isfinite(cfg.alpha) && cfg.alpha > 0.0)) fail("alpha must be positive");
    if (!(std::isfinite(cfg.delta) && cfg.delta > 0.0 && cfg.delta < 1.0))
        fail("delta must lie in (0, 1)");
    if (cfg.horizon < 0) fail("horizon must be nonnegative");
    if (!(std::isfinite(cfg.regret_budget_coefficient) && cfg.regret_budget_coefficient > 0.0))
        fail("regret budget coefficient must be positive");
    if (!(std::isfinite(cfg.margin_scale) && cfg.margin_scale >= 0.0))
        fail("margin_scale must be nonnegative");
}

int RoundInputs::optimal_arm() const {
    int best = 0;
    for (int a = 1; a < static_cast<int>(expected_costs.size()); ++a)
        if (expected_costs[a] < expected_costs[best]) best = a;
    return best;
}

}  // namespace bandit_lab
