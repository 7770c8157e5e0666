#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xpomcp/rule.hpp"
#include "xpomcp/trace.hpp"

namespace xpomcp {

// MAX-SMT instantiation problem: one soft clause per (action rule, step)
// pair — the rule's biconditional instantiated on that step's belief. A step
// can therefore cost up to |rules| when it contradicts several rules at once.
struct SynthesisProblem {
    RuleTemplate tmpl;
    std::vector<TraceStep> steps;
};

// (rule index, step index) pairs whose biconditional a given assignment
// leaves unsatisfied.
using RuleStepSet = std::set<std::pair<std::size_t, std::size_t>>;

struct SolverStats {
    std::string backend_id;
    double wall_ms = 0.0;
    std::string stderr_output;
};

struct SynthesisResult {
    LearnedRule rule;
    long cost = 0;  // number of unsatisfied (rule, step) pairs
    std::vector<std::size_t> unsatisfied_steps;  // steps violating any rule
    SolverStats stats;
    std::vector<std::string> warnings;
};

struct BackendConfig {
    // Solver executable speaking SMT-LIB2 on stdin/stdout. Resolution order:
    // explicit path here, $XPOMCP_SMT_SOLVER, then "z3smt"/"z3" on $PATH.
    std::string solver_path;
    double timeout_seconds = 600.0;
    // When set, every emitted script is also written here (numbered).
    std::string emit_smt_path;
};

// Variable equality classes induced by where-equalities, with the tightening
// polarity of each class.
enum class Polarity { None, Lower, Upper, Mixed };

struct VariableClasses {
    // class id -> member variable names; assignments are shared per class.
    std::vector<std::vector<std::string>> members;
    std::vector<Polarity> polarity;
    std::map<std::string, int> class_of;
};

VariableClasses analyze_variables(const RuleTemplate& tmpl);

// Full SMT-LIB2 script: range assertions, hard constraints, one soft
// assertion per (rule, step), lexicographic objectives (cost, then goodness).
std::string encode_smtlib(const SynthesisProblem& problem);

// Per-(rule, step) satisfaction of the biconditional under an assignment.
RuleStepSet unsatisfied_pairs(const RuleTemplate& tmpl,
                              const std::vector<TraceStep>& steps,
                              const std::map<std::string, double>& assignment);

// Phase-2 script: the satisfied/unsatisfied partition is pinned and only
// goodness is optimized.
std::string encode_tightening(const SynthesisProblem& problem,
                              const RuleStepSet& unsatisfied,
                              const std::map<std::string, double>& pin);

struct BackendOutput {
    std::map<std::string, double> model;
    std::optional<long> cost;
    std::string raw;
};

// Runs the solver subprocess on a script. Throws InfeasibleTemplateError on
// unsat, BackendError on failure/timeout/unreadable output.
BackendOutput run_backend(const std::string& script, const BackendConfig& config,
                          SolverStats* stats = nullptr);

// Algorithm: MAX-SMT for the minimal number of unsatisfied steps, then
// threshold tightening with the step partition pinned.
SynthesisResult synthesize(const RuleTemplate& tmpl,
                           const std::vector<TraceStep>& steps,
                           const BackendConfig& config);

// Tightening in isolation (used by synthesize; exposed for testing). Returns
// the tightest assignment subject to hard constraints and the fixed
// partition; mixed-polarity classes keep their pinned value and produce a
// warning.
std::map<std::string, double> tighten_thresholds(
    const RuleTemplate& tmpl, const std::vector<TraceStep>& steps,
    const RuleStepSet& unsatisfied, const std::map<std::string, double>& pin,
    const BackendConfig& config, std::vector<std::string>* warnings = nullptr);

// Exhaustive enumeration over candidate threshold grids; provably optimal
// for small instances (<= 4 variable classes, <= 400 steps). Independent of
// the SMT path.
SynthesisResult oracle_synthesize(const RuleTemplate& tmpl,
                                  const std::vector<TraceStep>& steps);

}  // namespace xpomcp
