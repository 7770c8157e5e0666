#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "xpomcp/errors.hpp"
#include "xpomcp/subprocess.hpp"
#include "xpomcp/synthesis.hpp"

namespace xpomcp {

namespace {

// --- minimal s-expression reader for solver output ---------------------

struct Sexp {
    std::string atom;  // empty for lists
    std::vector<Sexp> items;
    bool is_atom() const { return items.empty() && !atom.empty(); }
};

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (c == '(' || c == ')') {
            if (!cur.empty()) {
                tokens.push_back(cur);
                cur.clear();
            }
            tokens.push_back(std::string(1, c));
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) {
                tokens.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

Sexp parse_sexp(const std::vector<std::string>& tokens, std::size_t& pos) {
    if (pos >= tokens.size()) throw BackendError("solver output ended early");
    if (tokens[pos] == "(") {
        Sexp list;
        ++pos;
        while (pos < tokens.size() && tokens[pos] != ")")
            list.items.push_back(parse_sexp(tokens, pos));
        if (pos >= tokens.size())
            throw BackendError("unbalanced '(' in solver output");
        ++pos;  // ')'
        return list;
    }
    Sexp atom;
    atom.atom = tokens[pos++];
    return atom;
}

std::vector<Sexp> parse_all(const std::string& text) {
    const auto tokens = tokenize(text);
    std::vector<Sexp> out;
    std::size_t pos = 0;
    while (pos < tokens.size()) {
        if (tokens[pos] == ")")
            throw BackendError("unbalanced ')' in solver output");
        out.push_back(parse_sexp(tokens, pos));
    }
    return out;
}

double eval_numeric(const Sexp& e) {
    if (e.is_atom()) {
        if (e.atom == "epsilon") return 0.0;  // infinitesimal in objectives
        try {
            std::size_t used = 0;
            const double v = std::stod(e.atom, &used);
            if (used == e.atom.size()) return v;
        } catch (const std::exception&) {
        }
        throw BackendError("unreadable numeric token '" + e.atom +
                           "' in solver output");
    }
    if (e.items.empty()) throw BackendError("empty list in solver numeric value");
    const std::string& op = e.items[0].atom;
    if (op == "to_real" && e.items.size() == 2) return eval_numeric(e.items[1]);
    if (op == "-" && e.items.size() == 2) return -eval_numeric(e.items[1]);
    if (op == "-" && e.items.size() == 3)
        return eval_numeric(e.items[1]) - eval_numeric(e.items[2]);
    if (op == "+") {
        double sum = 0.0;
        for (std::size_t i = 1; i < e.items.size(); ++i)
            sum += eval_numeric(e.items[i]);
        return sum;
    }
    if (op == "*") {
        double prod = 1.0;
        for (std::size_t i = 1; i < e.items.size(); ++i)
            prod *= eval_numeric(e.items[i]);
        return prod;
    }
    if (op == "/" && e.items.size() == 3) {
        const double den = eval_numeric(e.items[2]);
        if (den == 0.0) throw BackendError("division by zero in solver value");
        return eval_numeric(e.items[1]) / den;
    }
    throw BackendError("unreadable value form '(" + op + " ...)' in solver output");
}

BackendOutput parse_backend_output(const std::string& text) {
    BackendOutput out;
    out.raw = text;
    {
        // The verdict comes first: an unsat script makes later (get-model)
        // commands fail, and those errors must not mask the unsat itself.
        std::istringstream is(text);
        std::string line, first_error;
        while (std::getline(is, line)) {
            if (line == "unsat")
                throw InfeasibleTemplateError(
                    "hard constraints are unsatisfiable (solver said unsat)");
            if (line == "sat") break;
            if (first_error.empty() && line.find("(error") != std::string::npos)
                first_error = line;
        }
        if (!first_error.empty())
            throw BackendError("solver reported an error: " + first_error);
    }
    const auto forms = parse_all(text);
    bool saw_sat = false;
    for (const Sexp& form : forms) {
        if (form.is_atom()) {
            if (form.atom == "sat") saw_sat = true;
            if (form.atom == "unsat")
                throw InfeasibleTemplateError(
                    "hard constraints are unsatisfiable (solver said unsat)");
            if (form.atom == "unknown")
                throw BackendError("solver returned unknown");
            continue;
        }
        if (form.items.empty()) continue;
        const std::string& head = form.items[0].atom;
        if (head == "objectives") {
            for (std::size_t i = 1; i < form.items.size(); ++i) {
                const Sexp& entry = form.items[i];
                if (entry.items.size() == 2 && entry.items[0].atom == "cost")
                    out.cost = std::lround(eval_numeric(entry.items[1]));
            }
        } else if (head == "define-fun" && form.items.size() == 5) {
            // (define-fun <name> () Real <value>)
            if (form.items[3].atom == "Real" || form.items[3].atom == "Int")
                out.model[form.items[1].atom] = eval_numeric(form.items[4]);
        } else if (head == "model" || head.empty()) {
            for (const Sexp& inner : form.items) {
                if (inner.items.size() == 5 && inner.items[0].atom == "define-fun" &&
                    (inner.items[3].atom == "Real" || inner.items[3].atom == "Int"))
                    out.model[inner.items[1].atom] = eval_numeric(inner.items[4]);
            }
        }
    }
    if (!saw_sat)
        throw BackendError("solver produced no sat/unsat verdict; output was: " +
                           text.substr(0, 400));
    return out;
}

bool is_executable(const std::string& path) {
    return !path.empty() && access(path.c_str(), X_OK) == 0;
}

std::string find_in_path(const std::string& name) {
    const char* path_env = std::getenv("PATH");
    if (!path_env) return "";
    std::istringstream is(path_env);
    std::string dir;
    while (std::getline(is, dir, ':')) {
        if (dir.empty()) continue;
        const std::string candidate = dir + "/" + name;
        if (is_executable(candidate)) return candidate;
    }
    return "";
}

std::string resolve_solver(const BackendConfig& config) {
    if (!config.solver_path.empty()) return config.solver_path;
    if (const char* env = std::getenv("XPOMCP_SMT_SOLVER"))
        if (*env) return env;
    for (const char* name : {"z3smt", "z3"}) {
        const std::string found = find_in_path(name);
        if (!found.empty()) return found;
    }
    throw BackendError(
        "no SMT solver found: set XPOMCP_SMT_SOLVER or put z3smt/z3 on PATH");
}

void maybe_emit(const BackendConfig& config, const std::string& script,
                const char* phase) {
    if (config.emit_smt_path.empty()) return;
    const std::string path = config.emit_smt_path + "." + phase + ".smt2";
    std::ofstream out(path);
    if (!out) throw Error("cannot write SMT script to " + path);
    out << script;
}

std::map<std::string, double> complete_assignment(
    const RuleTemplate& tmpl, const std::map<std::string, double>& model) {
    std::map<std::string, double> assignment;
    for (const std::string& var : tmpl.free_variables()) {
        auto it = model.find(var);
        // Solvers may omit genuinely unconstrained constants; 0 is in range.
        assignment[var] = it != model.end() ? it->second : 0.0;
    }
    return assignment;
}

// The solver's extremal thresholds land exactly on problem constants (belief
// values or template constants). It may print them as fractions whose 64-bit
// numerators round when read back as doubles, moving a threshold one ulp off
// the boundary and flipping a non-strict comparison. Snap each value back to
// the nearest problem constant within a few ulps, keeping the snap only when
// it does not increase the unsatisfied-pair count.
std::map<std::string, double> snap_to_constants(
    const RuleTemplate& tmpl, const std::vector<TraceStep>& steps,
    const std::map<std::string, double>& assignment) {
    std::vector<double> targets = {0.0, 1.0};
    for (const TraceStep& step : steps)
        for (const auto& [name, value] : step.belief) targets.push_back(value);
    for (const HardConstraint& hc : tmpl.constraints)
        if (const double* c = std::get_if<double>(&hc.rhs)) targets.push_back(*c);
    for (const ActionRule& rule : tmpl.rules)
        for (const Subformula& sub : rule.body)
            for (const Literal& lit : sub.literals)
                if (const double* c = std::get_if<double>(&lit.rhs))
                    targets.push_back(*c);
    std::sort(targets.begin(), targets.end());

    std::map<std::string, double> snapped = assignment;
    for (auto& [var, value] : snapped) {
        const auto hi = std::lower_bound(targets.begin(), targets.end(), value);
        double nearest = std::numeric_limits<double>::infinity();
        if (hi != targets.end()) nearest = *hi;
        if (hi != targets.begin() &&
            std::abs(*(hi - 1) - value) < std::abs(nearest - value))
            nearest = *(hi - 1);
        const double tol = 4.0 * std::numeric_limits<double>::epsilon() *
                           std::max(1.0, std::abs(value));
        if (std::isfinite(nearest) && std::abs(nearest - value) <= tol)
            value = nearest;
    }
    if (snapped == assignment) return assignment;
    return unsatisfied_pairs(tmpl, steps, snapped).size() <=
                   unsatisfied_pairs(tmpl, steps, assignment).size()
               ? snapped
               : assignment;
}

}  // namespace

BackendOutput run_backend(const std::string& script, const BackendConfig& config,
                          SolverStats* stats) {
    const std::string solver = resolve_solver(config);
    const auto start = std::chrono::steady_clock::now();
    const SubprocessResult proc =
        run_subprocess(solver, script, config.timeout_seconds);
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                  start)
            .count();
    if (stats) {
        stats->backend_id = solver;
        stats->wall_ms += wall_ms;
        stats->stderr_output += proc.stderr_text;
    }
    if (proc.timed_out)
        throw BackendError("solver '" + solver + "' timed out after " +
                           std::to_string(config.timeout_seconds) + "s");
    BackendOutput out = parse_backend_output(proc.stdout_text);
    if (proc.exit_code != 0 && !out.cost && out.model.empty())
        throw BackendError("solver '" + solver + "' exited with code " +
                           std::to_string(proc.exit_code) + ": " +
                           proc.stderr_text.substr(0, 400));
    return out;
}

std::map<std::string, double> tighten_thresholds(
    const RuleTemplate& tmpl, const std::vector<TraceStep>& steps,
    const RuleStepSet& unsatisfied, const std::map<std::string, double>& pin,
    const BackendConfig& config, std::vector<std::string>* warnings) {
    const VariableClasses classes = analyze_variables(tmpl);
    std::map<std::string, double> pinned;
    for (std::size_t c = 0; c < classes.members.size(); ++c) {
        if (classes.polarity[c] == Polarity::Lower ||
            classes.polarity[c] == Polarity::Upper)
            continue;
        for (const std::string& var : classes.members[c]) {
            auto it = pin.find(var);
            pinned[var] = it != pin.end() ? it->second : 0.0;
        }
        if (classes.polarity[c] == Polarity::Mixed && warnings)
            warnings->push_back("variable class {" + classes.members[c].front() +
                                ", ...} has mixed polarity; kept its pinned value");
    }
    SynthesisProblem problem{tmpl, steps};
    const std::string script = encode_tightening(problem, unsatisfied, pinned);
    maybe_emit(config, script, "tighten");
    const BackendOutput out = run_backend(script, config);
    return snap_to_constants(tmpl, steps, complete_assignment(tmpl, out.model));
}

SynthesisResult synthesize(const RuleTemplate& tmpl,
                           const std::vector<TraceStep>& steps,
                           const BackendConfig& config) {
    if (tmpl.rules.empty()) throw ContractError("template has no action rules");
    if (steps.empty()) throw ContractError("synthesis needs at least one step");
    std::vector<std::string> names;
    for (const auto& [name, value] : steps.front().belief) names.push_back(name);
    validate_against(tmpl, names);

    SynthesisResult result;
    SynthesisProblem problem{tmpl, steps};
    const std::string script = encode_smtlib(problem);
    maybe_emit(config, script, "cost");
    const BackendOutput phase1 = run_backend(script, config, &result.stats);

    LearnedRule rule{
        tmpl, snap_to_constants(tmpl, steps,
                                complete_assignment(tmpl, phase1.model))};
    RuleStepSet unsat = unsatisfied_pairs(tmpl, steps, rule.assignment);
    if (phase1.cost && *phase1.cost != static_cast<long>(unsat.size()))
        result.warnings.push_back(
            "solver cost " + std::to_string(*phase1.cost) +
            " differs from recomputed unsatisfied count " +
            std::to_string(unsat.size()));

    try {
        const auto tightened = tighten_thresholds(
            tmpl, steps, unsat, rule.assignment, config, &result.warnings);
        LearnedRule candidate{tmpl, tightened};
        if (unsatisfied_pairs(tmpl, steps, candidate.assignment) == unsat)
            rule = candidate;
        else
            result.warnings.push_back(
                "tightening changed the rule/step partition; kept the phase-1 "
                "assignment");
    } catch (const BackendError& e) {
        result.warnings.push_back(std::string("tightening failed: ") + e.what());
    }

    result.rule = rule;
    result.cost = static_cast<long>(unsat.size());
    std::set<std::size_t> unsat_steps;
    for (const auto& [r, i] : unsat) unsat_steps.insert(i);
    result.unsatisfied_steps.assign(unsat_steps.begin(), unsat_steps.end());
    return result;
}

}  // namespace xpomcp
