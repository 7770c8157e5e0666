#include "xpomcp/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "xpomcp/errors.hpp"
#include "xpomcp/rng.hpp"

namespace xpomcp {

namespace {

constexpr std::size_t kRateProposals = 1'000'000;
constexpr double kMinAcceptance = 1e-4;

void check_distribution(const std::vector<double>& d, const char* which) {
    double sum = 0.0;
    for (double v : d) {
        if (v < 0.0)
            throw ContractError(std::string(which) + " has a negative entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw ContractError(std::string(which) + " sums to " +
                            std::to_string(sum) + ", expected 1");
}

std::vector<double> belief_vector(const BeliefProjection& belief,
                                  const std::vector<std::string>& names) {
    std::vector<double> out;
    out.reserve(names.size());
    for (const std::string& name : names) {
        auto it = belief.find(name);
        if (it == belief.end())
            throw ContractError("belief lacks variable '" + name + "'");
        out.push_back(it->second);
    }
    return out;
}

// Union region of every action rule: a single disjunction of all bodies.
std::vector<Subformula> union_body(const RuleTemplate& tmpl) {
    std::vector<Subformula> body;
    for (const ActionRule& rule : tmpl.rules)
        body.insert(body.end(), rule.body.begin(), rule.body.end());
    return body;
}

}  // namespace

double hellinger(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size() || p.empty())
        throw ContractError("hellinger needs two equally sized distributions");
    check_distribution(p, "first distribution");
    check_distribution(q, "second distribution");
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
        sum += d * d;
    }
    const double h = std::sqrt(sum) / std::sqrt(2.0);
    return std::min(h, 1.0);
}

std::vector<BeliefProjection> sample_satisfying_beliefs(
    const std::vector<Subformula>& body,
    const std::map<std::string, double>& assignment,
    const std::vector<std::string>& belief_names, int count,
    std::uint64_t seed) {
    if (count < 1) throw ContractError("sample count must be >= 1");
    const std::size_t k = belief_names.size();
    if (k < 2) throw ContractError("belief projection needs >= 2 variables");

    Rng rng(seed);
    std::vector<BeliefProjection> accepted;
    accepted.reserve(static_cast<std::size_t>(count));
    std::size_t proposals = 0;
    BeliefProjection sample;
    while (accepted.size() < static_cast<std::size_t>(count)) {
        if (proposals == kRateProposals &&
            static_cast<double>(accepted.size()) <
                kMinAcceptance * static_cast<double>(proposals))
            throw UnsatRegionError(
                "rule region acceptance rate below 1e-4 over 10^6 uniform "
                "simplex proposals; the body region is empty or vanishingly "
                "small");
        ++proposals;
        // Symmetric Dirichlet(1): normalized exponentials; for k=2 this is
        // the same law as uniform p mapped to (p, 1-p).
        double total = 0.0;
        sample.clear();
        for (const std::string& name : belief_names)
            total += (sample[name] = rng.exponential());
        for (const std::string& name : belief_names) sample[name] /= total;
        if (body.empty() || eval_body(body, sample, assignment))
            accepted.push_back(sample);
    }
    return accepted;
}

std::vector<BeliefProjection> sample_satisfying_beliefs(
    const LearnedRule& rule, const std::string& action_rule_name,
    const std::vector<std::string>& belief_names, int count,
    std::uint64_t seed) {
    for (const ActionRule& action_rule : rule.tmpl.rules)
        if (action_rule.name == action_rule_name)
            return sample_satisfying_beliefs(action_rule.body, rule.assignment,
                                             belief_names, count, seed);
    throw ContractError("template has no rule named '" + action_rule_name + "'");
}

AnomalyReport classify_violations(const LearnedRule& rule,
                                  const std::vector<TraceStep>& violating_steps,
                                  const AnomalyConfig& config) {
    if (config.tau < 0.0 || config.tau > 1.0)
        throw ContractError("tau must be in [0,1]");
    if (config.sample_count < 1) throw ContractError("sample count w must be >= 1");

    AnomalyReport report;
    report.rule = rule;
    report.config = config;
    if (violating_steps.empty()) return report;

    std::vector<std::string> names;
    for (const auto& [name, value] : violating_steps.front().belief)
        names.push_back(name);

    // One sample set per distinct region (rule body or the union fallback),
    // shared by every step graded against that region.
    std::map<int, std::vector<std::vector<double>>> region_samples;
    auto samples_for_action = [&](int action) -> const auto& {
        auto it = region_samples.find(action);
        if (it != region_samples.end()) return it->second;
        std::vector<BeliefProjection> beliefs;
        const ActionRule* match = nullptr;
        for (const ActionRule& action_rule : rule.tmpl.rules)
            if (action_rule.action == action) match = &action_rule;
        try {
            if (!match) throw UnsatRegionError("no rule for the taken action");
            beliefs = sample_satisfying_beliefs(match->body, rule.assignment,
                                                names, config.sample_count,
                                                config.seed);
        } catch (const UnsatRegionError&) {
            beliefs = sample_satisfying_beliefs(union_body(rule.tmpl),
                                                rule.assignment, names,
                                                config.sample_count, config.seed);
        }
        std::vector<std::vector<double>> vectors;
        vectors.reserve(beliefs.size());
        for (const BeliefProjection& b : beliefs)
            vectors.push_back(belief_vector(b, names));
        return region_samples.emplace(action, std::move(vectors)).first->second;
    };

    for (const TraceStep& step : violating_steps) {
        const auto point = belief_vector(step.belief, names);
        double h = 1.0;
        for (const auto& sample : samples_for_action(step.action))
            h = std::min(h, hellinger(point, sample));
        report.findings.push_back({step.run_id, step.step_index, step.action,
                                   step.belief, h, h >= config.tau});
    }
    std::stable_sort(report.findings.begin(), report.findings.end(),
                     [](const AnomalyFinding& a, const AnomalyFinding& b) {
                         return a.h > b.h;
                     });
    return report;
}

std::string report_text(const AnomalyReport& report) {
    std::ostringstream os;
    os << "rule: " << pretty_print(report.rule) << "\n";
    os << "Unsatisfiable steps:\n";
    char buf[64];
    for (const AnomalyFinding& f : report.findings) {
        const std::string prefix = f.unexpected ? "ANOMALY: " : "";
        os << prefix << "run Run_" << f.run_id << " step " << f.step_index
           << ":\n";
        os << "action " << f.action << " with belief";
        for (const auto& [name, value] : f.belief) {
            std::snprintf(buf, sizeof(buf), " %s = %.3f", name.c_str(), value);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g", f.h);
        os << "\n--- Hellinger = " << buf << "\n\n";
    }
    return os.str();
}

nlohmann::json report_json(const AnomalyReport& report) {
    nlohmann::json j;
    j["rule"] = pretty_print(report.rule);
    j["tau"] = report.config.tau;
    j["sample_count"] = report.config.sample_count;
    j["seed"] = report.config.seed;
    j["thresholds"] = report.rule.assignment;
    j["violations"] = nlohmann::json::array();
    for (const AnomalyFinding& f : report.findings) {
        nlohmann::json v;
        v["run"] = f.run_id;
        v["step"] = f.step_index;
        v["action"] = f.action;
        v["belief"] = f.belief;
        v["hellinger"] = f.h;
        v["unexpected"] = f.unexpected;
        j["violations"].push_back(v);
    }
    return j;
}

}  // namespace xpomcp
