#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "xpomcp/rule.hpp"
#include "xpomcp/trace.hpp"

namespace xpomcp {

struct AnomalyConfig {
    double tau = 0.1;
    int sample_count = 5000;  // w, rule-region samples per step
    std::uint64_t seed = 0;
};

struct AnomalyFinding {
    int run_id = 0;
    int step_index = 0;
    int action = 0;
    BeliefProjection belief;
    double h = 0.0;
    bool unexpected = false;
};

// Findings sorted by h descending (most anomalous first).
struct AnomalyReport {
    LearnedRule rule;
    AnomalyConfig config;
    std::vector<AnomalyFinding> findings;
};

// Discrete Hellinger distance:
// (1/sqrt(2)) * sqrt(sum (sqrt(P_i) - sqrt(Q_i))^2). Inputs must be equally
// sized distributions (entries >= 0, sum 1 +- 1e-6); throws ContractError.
double hellinger(const std::vector<double>& p, const std::vector<double>& q);

// Rejection sampling of beliefs over `belief_names` that satisfy `body`
// under `assignment`. Proposals are uniform on the simplex (symmetric
// Dirichlet alpha=1). Throws UnsatRegionError when the acceptance rate drops
// below 1e-4 over 10^6 proposals.
std::vector<BeliefProjection> sample_satisfying_beliefs(
    const std::vector<Subformula>& body,
    const std::map<std::string, double>& assignment,
    const std::vector<std::string>& belief_names, int count, std::uint64_t seed);

// Convenience wrapper: the region of the named action rule.
std::vector<BeliefProjection> sample_satisfying_beliefs(
    const LearnedRule& rule, const std::string& action_rule_name,
    const std::vector<std::string>& belief_names, int count, std::uint64_t seed);

// Grades each rule-violating step by its minimum Hellinger distance to the
// satisfying region of the rule whose action the step took (falling back to
// the union of all rule bodies when that region is empty or the action has
// no rule). unexpected <=> h >= tau.
AnomalyReport classify_violations(const LearnedRule& rule,
                                  const std::vector<TraceStep>& violating_steps,
                                  const AnomalyConfig& config);

// Human-readable report ("ANOMALY: run ... step ...").
std::string report_text(const AnomalyReport& report);

nlohmann::json report_json(const AnomalyReport& report);

}  // namespace xpomcp
