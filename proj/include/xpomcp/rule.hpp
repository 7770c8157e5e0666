#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "xpomcp/trace.hpp"

namespace xpomcp {

enum class CmpOp { Lt, Gt, Le, Ge, Eq };

const char* op_text(CmpOp op);

// One threshold literal: <prob-var> <op> <free-var | constant in [0,1]>.
struct Literal {
    std::string prob_var;
    CmpOp op = CmpOp::Ge;
    std::variant<std::string, double> rhs;

    bool operator==(const Literal&) const = default;
};

// Conjunction of literals.
struct Subformula {
    std::vector<Literal> literals;
    bool operator==(const Subformula&) const = default;
};

// "select <action> when <disjunction of subformulas>".
struct ActionRule {
    std::string name;
    int action = 0;
    std::vector<Subformula> body;
    bool operator==(const ActionRule&) const = default;
};

// Hard requirement: free-var <op> constant, or free-var == free-var.
struct HardConstraint {
    std::string lhs;
    CmpOp op = CmpOp::Eq;
    std::variant<std::string, double> rhs;
    bool operator==(const HardConstraint&) const = default;
};

struct RuleTemplate {
    std::vector<ActionRule> rules;
    std::vector<HardConstraint> constraints;

    std::vector<std::string> free_variables() const;
    std::vector<std::string> prob_variables() const;
    bool operator==(const RuleTemplate&) const = default;
};

// Template plus a full assignment of its free variables.
struct LearnedRule {
    RuleTemplate tmpl;
    std::map<std::string, double> assignment;
};

// Parses the documented grammar:
//   rule <id> { action: <int> when: <disjunction> }* [ where { <constraint>;* } ]
// Throws ParseError with line/column on syntax errors, duplicate free
// variables, or constants outside [0,1].
RuleTemplate parse_template(const std::string& text);

// Checks that every probability variable resolves to a trace belief name.
void validate_against(const RuleTemplate& tmpl,
                      const std::vector<std::string>& belief_names);

// Canonical text form; parse_template(pretty_print(t)) == t.
std::string pretty_print(const RuleTemplate& tmpl);

// Report rendering with thresholds substituted, e.g.
// "select action 2 when: p_0 >= 0.910 OR p_2 <= 0.013".
std::string pretty_print(const LearnedRule& rule);

// True when the literal/conjunction/disjunction holds on a belief.
bool eval_body(const std::vector<Subformula>& body, const BeliefProjection& belief,
               const std::map<std::string, double>& assignment);

// Biconditional step semantics: for every action rule,
// (step.action == rule.action) <=> (body holds on step.belief).
bool evaluate_rule(const LearnedRule& rule, const TraceStep& step);

}  // namespace xpomcp
