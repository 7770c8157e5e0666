#include <algorithm>
#include <cmath>
#include <set>

#include "xpomcp/errors.hpp"
#include "xpomcp/synthesis.hpp"

namespace xpomcp {

namespace {

constexpr std::size_t kMaxClasses = 4;
constexpr std::size_t kMaxSteps = 400;
constexpr std::size_t kMaxEvaluations = 2'000'000;
constexpr double kStrictEps = 1e-6;

bool holds(double lhs, CmpOp op, double rhs) {
    switch (op) {
        case CmpOp::Lt: return lhs < rhs;
        case CmpOp::Gt: return lhs > rhs;
        case CmpOp::Le: return lhs <= rhs;
        case CmpOp::Ge: return lhs >= rhs;
        case CmpOp::Eq: return lhs == rhs;
    }
    return false;
}

// Candidate thresholds for one equality class: every probability value the
// class is compared against, nudged both ways to realise strict bounds,
// plus midpoints, hard-constraint constants, and the range endpoints.
std::vector<double> candidate_grid(const RuleTemplate& tmpl,
                                   const std::vector<TraceStep>& steps,
                                   const VariableClasses& classes, int cls) {
    std::set<double> seeds{0.0, 1.0};
    for (const ActionRule& rule : tmpl.rules)
        for (const Subformula& sub : rule.body)
            for (const Literal& lit : sub.literals)
                if (auto* var = std::get_if<std::string>(&lit.rhs))
                    if (classes.class_of.at(*var) == cls)
                        for (const TraceStep& step : steps) {
                            auto it = step.belief.find(lit.prob_var);
                            if (it != step.belief.end()) seeds.insert(it->second);
                        }
    for (const HardConstraint& hc : tmpl.constraints)
        if (auto* c = std::get_if<double>(&hc.rhs))
            if (classes.class_of.at(hc.lhs) == cls) seeds.insert(*c);

    std::set<double> grid;
    for (double v : seeds) {
        grid.insert(v);
        grid.insert(v - kStrictEps);
        grid.insert(v + kStrictEps);
    }
    std::vector<double> sorted(seeds.begin(), seeds.end());
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        grid.insert(0.5 * (sorted[i] + sorted[i + 1]));

    std::vector<double> out;
    for (double v : grid)
        if (v >= 0.0 && v <= 1.0) out.push_back(v);
    return out;
}

bool constraints_hold(const RuleTemplate& tmpl,
                      const std::map<std::string, double>& assignment) {
    for (const HardConstraint& hc : tmpl.constraints) {
        const double lhs = assignment.at(hc.lhs);
        const double rhs = std::holds_alternative<std::string>(hc.rhs)
                               ? assignment.at(std::get<std::string>(hc.rhs))
                               : std::get<double>(hc.rhs);
        if (!holds(lhs, hc.op, rhs)) return false;
    }
    return true;
}

}  // namespace

SynthesisResult oracle_synthesize(const RuleTemplate& tmpl,
                                  const std::vector<TraceStep>& steps) {
    if (tmpl.rules.empty()) throw ContractError("template has no action rules");
    if (steps.empty()) throw ContractError("synthesis needs at least one step");
    const VariableClasses classes = analyze_variables(tmpl);
    if (classes.members.size() > kMaxClasses)
        throw OracleBoundError("oracle handles at most " +
                               std::to_string(kMaxClasses) +
                               " variable classes, got " +
                               std::to_string(classes.members.size()));
    if (steps.size() > kMaxSteps)
        throw OracleBoundError("oracle handles at most " +
                               std::to_string(kMaxSteps) + " steps, got " +
                               std::to_string(steps.size()));

    std::vector<std::vector<double>> grids;
    std::size_t combos = 1;
    for (std::size_t c = 0; c < classes.members.size(); ++c) {
        grids.push_back(candidate_grid(tmpl, steps, classes,
                                       static_cast<int>(c)));
        combos *= grids.back().size();
        if (combos > kMaxEvaluations)
            throw OracleBoundError("candidate grid too large (" +
                                   std::to_string(combos) + " combinations)");
    }

    long best_cost = -1;
    double best_goodness = 0.0;
    std::map<std::string, double> best_assignment;
    RuleStepSet best_unsat;

    std::vector<std::size_t> pick(grids.size(), 0);
    std::map<std::string, double> assignment;
    for (;;) {
        assignment.clear();
        double goodness = 0.0;
        for (std::size_t c = 0; c < grids.size(); ++c) {
            const double v = grids[c][pick[c]];
            for (const std::string& var : classes.members[c]) assignment[var] = v;
            if (classes.polarity[c] == Polarity::Lower) goodness += v;
            if (classes.polarity[c] == Polarity::Upper) goodness -= v;
        }
        if (constraints_hold(tmpl, assignment)) {
            RuleStepSet unsat = unsatisfied_pairs(tmpl, steps, assignment);
            const long cost = static_cast<long>(unsat.size());
            if (best_cost < 0 || cost < best_cost ||
                (cost == best_cost && goodness > best_goodness + 1e-12)) {
                best_cost = cost;
                best_goodness = goodness;
                best_assignment = assignment;
                best_unsat = std::move(unsat);
            }
        }
        // advance the mixed-radix counter
        std::size_t c = 0;
        while (c < pick.size() && ++pick[c] == grids[c].size()) pick[c++] = 0;
        if (c == pick.size()) break;
    }

    if (best_cost < 0)
        throw InfeasibleTemplateError(
            "no candidate assignment satisfies the hard constraints");

    SynthesisResult result;
    result.rule = LearnedRule{tmpl, best_assignment};
    result.cost = best_cost;
    std::set<std::size_t> unsat_steps;
    for (const auto& [r, i] : best_unsat) unsat_steps.insert(i);
    result.unsatisfied_steps.assign(unsat_steps.begin(), unsat_steps.end());
    result.stats.backend_id = "oracle";
    return result;
}

}  // namespace xpomcp
