#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "xpomcp/errors.hpp"
#include "xpomcp/synthesis.hpp"

namespace xpomcp {

namespace {

// SMT-LIB real literal: plain decimal, no exponent notation.
std::string smt_real(double v) {
    const bool neg = v < 0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17f", std::abs(v));
    std::string s = buf;
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (s.back() == '.') s.push_back('0');
    if (neg) return "(- " + s + ")";
    return s;
}

const char* smt_op(CmpOp op) {
    switch (op) {
        case CmpOp::Lt: return "<";
        case CmpOp::Gt: return ">";
        case CmpOp::Le: return "<=";
        case CmpOp::Ge: return ">=";
        case CmpOp::Eq: return "=";
    }
    return "?";
}

std::string literal_smt(const Literal& lit, const BeliefProjection& belief) {
    auto it = belief.find(lit.prob_var);
    if (it == belief.end())
        throw ValidationError("step belief lacks variable '" + lit.prob_var +
                              "'");
    const double p = it->second;
    if (auto* var = std::get_if<std::string>(&lit.rhs)) {
        std::ostringstream os;
        os << "(" << smt_op(lit.op) << " " << smt_real(p) << " " << *var << ")";
        return os.str();
    }
    const double c = std::get<double>(lit.rhs);
    bool truth = false;
    switch (lit.op) {
        case CmpOp::Lt: truth = p < c; break;
        case CmpOp::Gt: truth = p > c; break;
        case CmpOp::Le: truth = p <= c; break;
        case CmpOp::Ge: truth = p >= c; break;
        case CmpOp::Eq: truth = p == c; break;
    }
    return truth ? "true" : "false";
}

std::string conjunction_smt(const std::vector<std::string>& parts) {
    if (parts.size() == 1) return parts[0];
    std::string out = "(and";
    for (const auto& p : parts) out += " " + p;
    return out + ")";
}

std::string disjunction_smt(const std::vector<std::string>& parts) {
    if (parts.size() == 1) return parts[0];
    std::string out = "(or";
    for (const auto& p : parts) out += " " + p;
    return out + ")";
}

std::string body_smt(const std::vector<Subformula>& body,
                     const BeliefProjection& belief) {
    std::vector<std::string> disj;
    for (const Subformula& sub : body) {
        std::vector<std::string> conj;
        for (const Literal& lit : sub.literals)
            conj.push_back(literal_smt(lit, belief));
        disj.push_back(conjunction_smt(conj));
    }
    return disjunction_smt(disj);
}

// One rule's biconditional instantiated on one step: the body when the step
// took the rule's action, its negation otherwise.
std::string rule_step_clause_smt(const ActionRule& rule, const TraceStep& step) {
    std::string body = body_smt(rule.body, step.belief);
    if (step.action != rule.action) body = "(not " + body + ")";
    return body;
}

void emit_declarations(std::ostringstream& os, const RuleTemplate& tmpl) {
    for (const std::string& var : tmpl.free_variables()) {
        os << "(declare-const " << var << " Real)\n";
        os << "(assert (>= " << var << " 0.0))\n";
        os << "(assert (<= " << var << " 1.0))\n";
    }
    for (const HardConstraint& hc : tmpl.constraints) {
        os << "(assert (" << smt_op(hc.op) << " " << hc.lhs << " ";
        if (auto* var = std::get_if<std::string>(&hc.rhs))
            os << *var;
        else
            os << smt_real(std::get<double>(hc.rhs));
        os << "))\n";
    }
}

std::string goodness_expr(const VariableClasses& classes) {
    std::vector<std::string> lower, upper;
    for (std::size_t c = 0; c < classes.members.size(); ++c) {
        if (classes.polarity[c] == Polarity::Lower)
            lower.push_back(classes.members[c].front());
        else if (classes.polarity[c] == Polarity::Upper)
            upper.push_back(classes.members[c].front());
    }
    if (lower.empty() && upper.empty()) return "";
    auto sum = [](const std::vector<std::string>& vars) -> std::string {
        if (vars.empty()) return "0.0";
        if (vars.size() == 1) return vars[0];
        std::string out = "(+";
        for (const auto& v : vars) out += " " + v;
        return out + ")";
    };
    if (upper.empty()) return sum(lower);
    return "(- " + sum(lower) + " " + sum(upper) + ")";
}

}  // namespace

VariableClasses analyze_variables(const RuleTemplate& tmpl) {
    VariableClasses out;
    const auto vars = tmpl.free_variables();
    std::vector<int> parent(vars.size());
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        parent[i] = static_cast<int>(i);
        index[vars[i]] = static_cast<int>(i);
    }
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const HardConstraint& hc : tmpl.constraints)
        if (hc.op == CmpOp::Eq)
            if (auto* rhs = std::get_if<std::string>(&hc.rhs))
                parent[find(index.at(hc.lhs))] = find(index.at(*rhs));

    std::map<std::string, Polarity> var_polarity;
    for (const ActionRule& rule : tmpl.rules)
        for (const Subformula& sub : rule.body)
            for (const Literal& lit : sub.literals)
                if (auto* var = std::get_if<std::string>(&lit.rhs)) {
                    const Polarity p =
                        (lit.op == CmpOp::Ge || lit.op == CmpOp::Gt)
                            ? Polarity::Lower
                            : Polarity::Upper;
                    auto [it, inserted] = var_polarity.emplace(*var, p);
                    if (!inserted && it->second != p) it->second = Polarity::Mixed;
                }

    std::map<int, int> root_to_class;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        const int root = find(static_cast<int>(i));
        auto [it, inserted] =
            root_to_class.emplace(root, static_cast<int>(out.members.size()));
        if (inserted) {
            out.members.emplace_back();
            out.polarity.push_back(Polarity::None);
        }
        const int cls = it->second;
        out.members[cls].push_back(vars[i]);
        out.class_of[vars[i]] = cls;
        const Polarity p = var_polarity.count(vars[i]) ? var_polarity[vars[i]]
                                                       : Polarity::None;
        Polarity& cp = out.polarity[cls];
        if (cp == Polarity::None)
            cp = p;
        else if (p != Polarity::None && p != cp)
            cp = Polarity::Mixed;
    }
    return out;
}

std::string encode_smtlib(const SynthesisProblem& problem) {
    std::ostringstream os;
    os << "(set-option :opt.priority lex)\n";
    emit_declarations(os, problem.tmpl);
    for (const TraceStep& step : problem.steps)
        for (const ActionRule& rule : problem.tmpl.rules)
            os << "(assert-soft " << rule_step_clause_smt(rule, step)
               << " :weight 1 :id cost)\n";
    const std::string goodness = goodness_expr(analyze_variables(problem.tmpl));
    if (!goodness.empty()) os << "(maximize " << goodness << ")\n";
    os << "(check-sat)\n(get-model)\n(get-objectives)\n";
    return os.str();
}

RuleStepSet unsatisfied_pairs(const RuleTemplate& tmpl,
                              const std::vector<TraceStep>& steps,
                              const std::map<std::string, double>& assignment) {
    RuleStepSet out;
    for (std::size_t i = 0; i < steps.size(); ++i)
        for (std::size_t r = 0; r < tmpl.rules.size(); ++r) {
            const ActionRule& rule = tmpl.rules[r];
            const bool body =
                eval_body(rule.body, steps[i].belief, assignment);
            if ((steps[i].action == rule.action) != body) out.emplace(r, i);
        }
    return out;
}

std::string encode_tightening(const SynthesisProblem& problem,
                              const RuleStepSet& unsatisfied,
                              const std::map<std::string, double>& pin) {
    std::ostringstream os;
    emit_declarations(os, problem.tmpl);
    for (const auto& [var, value] : pin)
        os << "(assert (= " << var << " " << smt_real(value) << "))\n";
    for (std::size_t i = 0; i < problem.steps.size(); ++i)
        for (std::size_t r = 0; r < problem.tmpl.rules.size(); ++r) {
            std::string clause =
                rule_step_clause_smt(problem.tmpl.rules[r], problem.steps[i]);
            if (unsatisfied.count({r, i})) clause = "(not " + clause + ")";
            os << "(assert " << clause << ")\n";
        }
    const std::string goodness = goodness_expr(analyze_variables(problem.tmpl));
    if (!goodness.empty()) os << "(maximize " << goodness << ")\n";
    os << "(check-sat)\n(get-model)\n";
    return os.str();
}

}  // namespace xpomcp
