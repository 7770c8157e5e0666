#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xpomcp/pomdp.hpp"

namespace xpomcp {

// One recorded decision: the belief projection as it was *before* acting,
// and the action then chosen.
struct TraceStep {
    int run_id = 0;
    int step_index = 0;
    int action = 0;
    BeliefProjection belief;
    std::optional<int> optimal_action;  // filled by the exact solver
    std::optional<std::map<std::uint64_t, int>> particle_histogram;

    bool operator==(const TraceStep&) const = default;
};

struct TraceHeader {
    int format_version = 1;
    std::string model_id;
    std::string model_params_hash;
    double w = 0.0;
    int particle_count = 0;
    std::uint64_t seed = 0;
    std::string created_at;

    bool operator==(const TraceHeader&) const = default;
};

struct Trace {
    TraceHeader header;
    std::vector<TraceStep> steps;

    bool operator==(const Trace&) const = default;
};

// JSON-lines: line 1 is the header object, each following line one step.
// Throws ValidationError on an invalid trace, Error on I/O failure.
void write_trace(const Trace& trace, const std::string& path);

// Validating reader. Unknown keys, malformed lines and invariant violations
// are reported with their line number.
Trace read_trace(const std::string& path);

// Shared validation (used by both writer and reader).
void validate_trace(const Trace& trace);

}  // namespace xpomcp
