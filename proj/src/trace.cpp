#include "xpomcp/trace.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "xpomcp/errors.hpp"

#include <json.hpp>

namespace xpomcp {

using ordered_json = nlohmann::ordered_json;

void validate_trace(const Trace& trace) {
    if (trace.header.model_id.empty())
        throw ValidationError("trace header: empty model id");
    if (trace.steps.empty())
        throw ValidationError("trace has no steps");
    int prev_run = -1, prev_step = -1;
    for (const TraceStep& s : trace.steps) {
        if (s.run_id == prev_run && s.step_index <= prev_step)
            throw ValidationError(
                "step indices must be strictly increasing within run " +
                std::to_string(s.run_id));
        prev_run = s.run_id;
        prev_step = s.step_index;
        if (s.action < 0) throw ValidationError("negative action");
        double sum = 0.0;
        for (const auto& [name, p] : s.belief) {
            if (p < 0.0 || p > 1.0)
                throw ValidationError("belief variable " + name +
                                      " outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            std::ostringstream os;
            os << "belief of run " << s.run_id << " step " << s.step_index
               << " sums to " << sum;
            throw ValidationError(os.str());
        }
    }
}

namespace {

ordered_json header_to_json(const TraceHeader& h) {
    ordered_json j;
    j["format_version"] = h.format_version;
    j["model_id"] = h.model_id;
    j["model_params_hash"] = h.model_params_hash;
    j["w"] = h.w;
    j["particle_count"] = h.particle_count;
    j["seed"] = h.seed;
    j["created_at"] = h.created_at;
    return j;
}

ordered_json step_to_json(const TraceStep& s) {
    ordered_json j;
    j["run"] = s.run_id;
    j["step"] = s.step_index;
    j["action"] = s.action;
    ordered_json belief = ordered_json::object();
    for (const auto& [name, p] : s.belief) belief[name] = p;
    j["belief"] = belief;
    if (s.optimal_action)
        j["optimal_action"] = *s.optimal_action;
    else
        j["optimal_action"] = nullptr;
    if (s.particle_histogram) {
        ordered_json hist = ordered_json::object();
        for (const auto& [state, count] : *s.particle_histogram)
            hist[std::to_string(state)] = count;
        j["particles"] = hist;
    }
    return j;
}

[[noreturn]] void fail_parse(const std::string& msg, int line) {
    throw ParseError("trace: " + msg, line);
}

void check_keys(const ordered_json& obj,
                const std::vector<std::string>& allowed, int line) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const auto& k : allowed) known |= (item.key() == k);
        if (!known) fail_parse("unknown key \"" + item.key() + "\"", line);
    }
}

}  // namespace

void write_trace(const Trace& trace, const std::string& path) {
    validate_trace(trace);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << header_to_json(trace.header).dump() << "\n";
    for (const TraceStep& s : trace.steps) out << step_to_json(s).dump() << "\n";
    out.flush();
    if (!out) throw Error("write failed: " + path);
}

Trace read_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    Trace trace;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json j = ordered_json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            fail_parse("malformed JSON object", lineno);
        try {
            if (lineno == 1) {
                check_keys(j,
                           {"format_version", "model_id", "model_params_hash",
                            "w", "particle_count", "seed", "created_at"},
                           lineno);
                TraceHeader& h = trace.header;
                h.format_version = j.at("format_version").get<int>();
                if (h.format_version != 1)
                    fail_parse("unsupported format_version", lineno);
                h.model_id = j.at("model_id").get<std::string>();
                h.model_params_hash = j.at("model_params_hash").get<std::string>();
                h.w = j.at("w").get<double>();
                h.particle_count = j.at("particle_count").get<int>();
                h.seed = j.at("seed").get<std::uint64_t>();
                h.created_at = j.at("created_at").get<std::string>();
            } else {
                check_keys(j, {"run", "step", "action", "belief",
                               "optimal_action", "particles"},
                           lineno);
                TraceStep s;
                s.run_id = j.at("run").get<int>();
                s.step_index = j.at("step").get<int>();
                s.action = j.at("action").get<int>();
                for (const auto& item : j.at("belief").items())
                    s.belief[item.key()] = item.value().get<double>();
                if (j.contains("optimal_action") && !j["optimal_action"].is_null())
                    s.optimal_action = j["optimal_action"].get<int>();
                if (j.contains("particles")) {
                    std::map<std::uint64_t, int> hist;
                    for (const auto& item : j["particles"].items())
                        hist[std::stoull(item.key())] = item.value().get<int>();
                    s.particle_histogram = std::move(hist);
                }
                double sum = 0.0;
                for (const auto& [name, p] : s.belief) sum += p;
                if (std::abs(sum - 1.0) > 1e-6) {
                    std::ostringstream os;
                    os << "belief sums to " << sum;
                    throw ValidationError("trace: " + os.str() + " (line " +
                                          std::to_string(lineno) + ")");
                }
                trace.steps.push_back(std::move(s));
            }
        } catch (const ordered_json::exception& e) {
            fail_parse(e.what(), lineno);
        }
    }
    if (lineno == 0) fail_parse("empty file", 1);
    try {
        validate_trace(trace);
    } catch (const ValidationError& e) {
        // Re-raise with the offending line when we can find it.
        throw ValidationError(std::string(e.what()) + " [" + path + "]");
    }
    return trace;
}

}  // namespace xpomcp
