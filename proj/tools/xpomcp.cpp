// xpomcp: plan in POMDPs with POMCP, record traces, synthesize belief rules
// via MAX-SMT, and flag rule-violating decisions by Hellinger distance.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "xpomcp/anomaly.hpp"
#include "xpomcp/errors.hpp"
#include "xpomcp/exact.hpp"
#include "xpomcp/iforest.hpp"
#include "xpomcp/pomcp.hpp"
#include "xpomcp/studies.hpp"
#include "xpomcp/synthesis.hpp"
#include "xpomcp/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xpomcp;

namespace {

constexpr int kExitUsage = 2;    // validation / schema / usage errors
constexpr int kExitBackend = 3;  // SMT backend failures

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

RuleTemplate load_template(const std::string& path_or_builtin) {
    if (path_or_builtin == "tiger") return parse_template(tiger_template_text());
    if (path_or_builtin == "velreg" || path_or_builtin == "velocity-regulation")
        return parse_template(velocity_template_text());
    return parse_template(read_text(path_or_builtin));
}

LearnedRule load_rule(const std::string& path) {
    const json j = json::parse(read_text(path));
    LearnedRule rule;
    rule.tmpl = parse_template(j.at("template").get<std::string>());
    for (const auto& [var, value] : j.at("assignment").items())
        rule.assignment[var] = value.get<double>();
    return rule;
}

json rule_to_json(const LearnedRule& rule) {
    json j;
    j["template"] = pretty_print(rule.tmpl);
    j["assignment"] = rule.assignment;
    return j;
}

// ---- subcommands ---------------------------------------------------------

struct SimulateArgs {
    std::string model = "tiger";
    std::string model_config;
    std::string out = "trace.jsonl";
    int runs = 100;
    std::uint64_t seed = 0;
    int particles = 1 << 13;
    int simulations = 1 << 13;
    double reward_range = 110.0;
    int max_steps = 0;
    bool histograms = false;
};

int cmd_simulate(const SimulateArgs& a) {
    const auto model = make_model(a.model, a.model_config);
    PlannerConfig planner;
    planner.particle_count = a.particles;
    planner.simulations_per_step = a.simulations;
    planner.reward_range = a.reward_range;
    planner.max_steps = a.max_steps;
    planner.seed = a.seed;
    planner.record_particle_histograms = a.histograms;
    const Trace trace = simulate_trace(model, planner, a.runs);
    write_trace(trace, a.out);
    std::printf("wrote %zu steps over %d runs to %s\n", trace.steps.size(),
                a.runs, a.out.c_str());
    return 0;
}

struct SynthesizeArgs {
    std::string trace;
    std::string tmpl;
    std::string out = ".";
    std::string solver;
    double timeout = 600.0;
    bool emit_smt = false;
};

int cmd_synthesize(const SynthesizeArgs& a) {
    const Trace trace = read_trace(a.trace);
    const RuleTemplate tmpl = load_template(a.tmpl);
    BackendConfig backend;
    backend.solver_path = a.solver;
    backend.timeout_seconds = a.timeout;
    if (a.emit_smt) backend.emit_smt_path = (fs::path(a.out) / "script").string();
    fs::create_directories(a.out);

    const SynthesisResult result = synthesize(tmpl, trace.steps, backend);
    std::printf("fail to satisfy %ld steps out of %zu\n", result.cost,
                trace.steps.size());
    std::printf("rule: %s\n", pretty_print(result.rule).c_str());
    for (const std::string& warning : result.warnings)
        std::fprintf(stderr, "warning: %s\n", warning.c_str());

    json j = rule_to_json(result.rule);
    j["cost"] = result.cost;
    j["steps"] = trace.steps.size();
    j["backend"] = result.stats.backend_id;
    write_text(fs::path(a.out) / "rule.json", j.dump(2) + "\n");
    write_text(fs::path(a.out) / "rule.txt", pretty_print(result.rule) + "\n");

    std::ostringstream violations;
    for (std::size_t idx : result.unsatisfied_steps) {
        const TraceStep& step = trace.steps[idx];
        json v;
        v["run"] = step.run_id;
        v["step"] = step.step_index;
        v["action"] = step.action;
        v["belief"] = step.belief;
        violations << v.dump() << "\n";
    }
    write_text(fs::path(a.out) / "violations.jsonl", violations.str());
    return 0;
}

struct DetectArgs {
    std::string trace;
    std::string rule;
    std::string method = "xpomcp";
    std::string out = ".";
    double tau = 0.1;
    int w = 5000;
    std::uint64_t seed = 0;
    double contamination = 0.03;
};

int cmd_detect(const DetectArgs& a) {
    const Trace trace = read_trace(a.trace);
    fs::create_directories(a.out);
    if (a.method == "iforest") {
        const auto model = make_model(trace.header.model_id);
        std::vector<FeatureRow> rows;
        for (const TraceStep& step : trace.steps)
            rows.push_back(make_feature_row(step, model->action_count()));
        IsolationForestConfig cfg;
        cfg.seed = a.seed;
        const IsolationForest forest = fit_isolation_forest(rows, cfg);
        const std::vector<double> scores = score_rows(forest, rows);
        const std::vector<bool> flags =
            detect_anomalies(forest, rows, a.contamination);
        std::ostringstream csv;
        csv << "run,step,score,anomaly\n";
        long flagged = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            csv << trace.steps[i].run_id << "," << trace.steps[i].step_index
                << "," << scores[i] << "," << (flags[i] ? 1 : 0) << "\n";
            flagged += flags[i] ? 1 : 0;
        }
        write_text(fs::path(a.out) / "iforest.csv", csv.str());
        std::printf("isolation forest flagged %ld of %zu steps\n", flagged,
                    rows.size());
        return 0;
    }
    if (a.method != "xpomcp")
        throw ValidationError("unknown method '" + a.method +
                              "' (xpomcp or iforest)");

    const LearnedRule rule = load_rule(a.rule);
    std::vector<TraceStep> violating;
    for (const TraceStep& step : trace.steps)
        if (!evaluate_rule(rule, step)) violating.push_back(step);

    AnomalyConfig cfg;
    cfg.tau = a.tau;
    cfg.sample_count = a.w;
    cfg.seed = a.seed;
    const AnomalyReport report = classify_violations(rule, violating, cfg);
    long unexpected = 0;
    for (const AnomalyFinding& f : report.findings)
        if (f.unexpected) ++unexpected;

    write_text(fs::path(a.out) / "anomalies.json",
               report_json(report).dump(2) + "\n");
    write_text(fs::path(a.out) / "report.txt", report_text(report));
    std::printf("%zu violations, %ld unexpected at tau=%g\n",
                report.findings.size(), unexpected, a.tau);
    return 0;
}

struct EvaluateArgs {
    std::string study = "tiger-w-sweep";
    std::string out = "results";
    int runs = 200;
    int traces = 10;
    std::uint64_t seed = 0;
    int particles = 1 << 13;
    int simulations = 1 << 13;
    int w = 5000;
    double tau = 0.1;
    std::string solver;
    double timeout = 600.0;
    bool verbose = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
    StudyConfig config;
    config.name = a.study;
    config.out_dir = a.out;
    config.runs = a.runs;
    config.traces = a.traces;
    config.seed = a.seed;
    config.particle_count = a.particles;
    config.simulations_per_step = a.simulations;
    config.sample_count = a.w;
    config.tau = a.tau;
    config.backend.solver_path = a.solver;
    config.backend.timeout_seconds = a.timeout;
    config.verbose = a.verbose;
    run_study(config);
    std::printf("study %s written to %s\n", a.study.c_str(), a.out.c_str());
    return 0;
}

struct ExactArgs {
    double gamma = 0.75;
    int horizon = 10;
    std::string out = "policy.json";
    std::string label_in;   // optional: trace to label
    std::string label_out;  // where the labeled trace goes
};

int cmd_exact_policy(const ExactArgs& a) {
    const ExactPolicy policy = solve(tiger_tabular(a.gamma), a.horizon);
    write_text(a.out, policy_to_json(policy));
    std::printf("tiger policy (gamma=%g, horizon=%d) written to %s\n", a.gamma,
                a.horizon, a.out.c_str());
    if (!a.label_in.empty()) {
        const Trace labeled = label_trace(read_trace(a.label_in), policy);
        const std::string out_path =
            a.label_out.empty() ? a.label_in + ".labeled" : a.label_out;
        write_trace(labeled, out_path);
        std::printf("labeled trace written to %s\n", out_path.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"XPOMCP-style toolkit: POMCP planning, rule synthesis and "
                 "unexpected-decision detection"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run POMCP and record a trace");
    simulate->add_option("--model", sim.model, "tiger or velocity-regulation");
    simulate->add_option("--model-config", sim.model_config,
                         "JSON overrides for model parameters");
    simulate->add_option("--runs", sim.runs, "episodes to record");
    simulate->add_option("--seed", sim.seed, "master RNG seed");
    simulate->add_option("--particles", sim.particles, "particle filter size");
    simulate->add_option("--simulations", sim.simulations, "UCT simulations per step");
    simulate->add_option("-W,--reward-range", sim.reward_range,
                         "UCB exploration constant W");
    simulate->add_option("--max-steps", sim.max_steps, "step cap (0: model horizon)");
    simulate->add_flag("--histograms", sim.histograms, "record particle histograms");
    simulate->add_option("--out", sim.out, "output trace path (JSONL)");

    SynthesizeArgs syn;
    auto* synthesize_cmd =
        app.add_subcommand("synthesize", "Learn rule thresholds from a trace");
    synthesize_cmd->add_option("--trace", syn.trace, "input trace")->required();
    synthesize_cmd
        ->add_option("--template", syn.tmpl,
                     "template file, or builtin 'tiger'/'velreg'")
        ->required();
    synthesize_cmd->add_option("--out", syn.out, "output directory");
    synthesize_cmd->add_option("--solver", syn.solver, "SMT solver executable");
    synthesize_cmd->add_option("--timeout", syn.timeout, "solver timeout (s)");
    synthesize_cmd->add_flag("--emit-smt", syn.emit_smt,
                             "also write the SMT-LIB2 scripts");

    DetectArgs det;
    auto* detect = app.add_subcommand("detect", "Classify rule violations");
    detect->add_option("--trace", det.trace, "input trace")->required();
    detect->add_option("--rule", det.rule, "learned rule (rule.json)");
    detect->add_option("--method", det.method, "xpomcp (default) or iforest");
    detect->add_option("--tau", det.tau, "Hellinger threshold");
    detect->add_option("-w,--samples", det.w, "rule-region samples");
    detect->add_option("--seed", det.seed, "sampling seed");
    detect->add_option("--contamination", det.contamination,
                       "isolation forest contamination");
    detect->add_option("--out", det.out, "output directory");

    EvaluateArgs eva;
    auto* evaluate = app.add_subcommand("evaluate", "Run a full study");
    auto* end_to_end =
        app.add_subcommand("end-to-end", "Alias of evaluate: simulate -> label "
                                         "-> synthesize -> detect -> evaluate");
    for (auto* cmd : {evaluate, end_to_end}) {
        cmd->add_option("--study", eva.study, "tiger-w-sweep or velreg-w90");
        cmd->add_option("--out", eva.out, "results directory");
        cmd->add_option("--runs", eva.runs, "runs per trace");
        cmd->add_option("--traces", eva.traces, "traces per W");
        cmd->add_option("--seed", eva.seed, "master seed");
        cmd->add_option("--particles", eva.particles, "particle filter size");
        cmd->add_option("--simulations", eva.simulations, "UCT simulations per step");
        cmd->add_option("-w,--samples", eva.w, "rule-region samples");
        cmd->add_option("--tau", eva.tau, "fixed threshold (velreg study)");
        cmd->add_option("--solver", eva.solver, "SMT solver executable");
        cmd->add_option("--timeout", eva.timeout, "solver timeout (s)");
        cmd->add_flag("--verbose", eva.verbose, "progress on stderr");
    }

    ExactArgs exa;
    auto* exact = app.add_subcommand("exact-policy",
                                     "Solve Tiger exactly (incremental pruning)");
    exact->add_option("--gamma", exa.gamma, "discount");
    exact->add_option("--horizon", exa.horizon, "decision horizon");
    exact->add_option("--out", exa.out, "policy JSON path");
    exact->add_option("--label", exa.label_in, "trace to label with optimal actions");
    exact->add_option("--label-out", exa.label_out, "labeled trace output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(sim);
        if (synthesize_cmd->parsed()) return cmd_synthesize(syn);
        if (detect->parsed()) return cmd_detect(det);
        if (evaluate->parsed() || end_to_end->parsed()) return cmd_evaluate(eva);
        if (exact->parsed()) return cmd_exact_policy(exa);
    } catch (const BackendError& e) {
        std::fprintf(stderr, "backend error: %s\n", e.what());
        return kExitBackend;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
