#include "xpomcp/velocity.hpp"

#include <cstdio>
#include <sstream>

#include "xpomcp/errors.hpp"

namespace xpomcp {

namespace {

constexpr int kSubsegmentCounts[8] = {3, 5, 2, 3, 2, 5, 4, 11};

// Subsegment lengths (meters) of the path map, in traversal order.
constexpr double kLengths[35] = {
    0.9, 0.9, 1.0,                  // segment 0
    1.0, 1.0, 1.2, 0.9, 1.15,       // segment 1
    0.6, 0.6,                       // segment 2
    0.9, 0.9, 1.0,                  // segment 3
    1.1, 1.1,                       // segment 4
    1.4, 1.0, 0.9, 0.9, 0.95,       // segment 5
    1.0, 0.9, 0.9, 0.9,             // segment 6
    1.0, 1.4, 1.2, 1.2, 1.2, 1.2,   // segment 7
    1.2, 1.2, 1.2, 1.2, 1.2};

constexpr int kSegmentOfSubsegment[35] = {
    0, 0, 0, 1, 1, 1, 1, 1, 2, 2, 3, 3, 3, 4, 4, 5, 5, 5,
    5, 5, 6, 6, 6, 6, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7};

}  // namespace

VelocityRegulationModel::CollisionTable
VelocityRegulationModel::default_collision_table() {
    return {{{0.0, 0.0, 0.028},    // f = 0
             {0.0, 0.056, 0.11},   // f = 1
             {0.0, 0.14, 0.25}}};  // f = 2
}

VelocityRegulationModel::VelocityRegulationModel(double gamma,
                                                 double collision_penalty)
    : VelocityRegulationModel(gamma, collision_penalty,
                              default_collision_table()) {}

VelocityRegulationModel::VelocityRegulationModel(double gamma,
                                                 double collision_penalty,
                                                 const CollisionTable& collision)
    : gamma_(gamma), collision_penalty_(collision_penalty) {
    if (gamma <= 0.0 || gamma > 1.0)
        throw ContractError("velocity-regulation: discount must be in (0,1]");
    for (const auto& row : collision)
        for (double p : row)
            if (p < 0.0 || p > 1.0)
                throw ContractError(
                    "velocity-regulation: collision probabilities must be in "
                    "[0,1]");
    for (int i = 0; i < kSubsegments; ++i) lengths_[i] = kLengths[i];
    occupancy_ = {0.0, 0.5, 1.0};
    collision_ = collision;
}

int VelocityRegulationModel::segment_of(int subsegment) {
    return kSegmentOfSubsegment[subsegment];
}

State VelocityRegulationModel::sample_initial_state(Rng& rng) const {
    return pack(0, rng.uniform_int(kDifficultyAssignments));
}

StepResult VelocityRegulationModel::step(State state, int action,
                                         Rng& rng) const {
    const int sub = subsegment_of(state);
    if (sub >= kSubsegments)
        throw ContractError("velocity-regulation: step on a terminal state");
    if (action < 0 || action >= 3)
        throw ContractError("velocity-regulation: action out of range: " +
                            std::to_string(action));
    const int code = difficulty_code_of(state);
    const int f = segment_difficulty(code, segment_of(sub));

    StepResult r;
    r.reward = lengths_[sub] * (1.0 + action);
    if (rng.bernoulli(collision_[f][action])) r.reward += collision_penalty_;
    r.observation = rng.bernoulli(occupancy_[f]) ? 1 : 0;
    r.next = pack(sub + 1, code);
    r.terminal = (sub + 1 == kSubsegments);
    return r;
}

BeliefProjection VelocityRegulationModel::belief_projection(
    const std::vector<State>& particles) const {
    if (particles.empty())
        throw ContractError(
            "velocity-regulation: belief projection of an empty particle set");
    // The subsegment index is observable, so every particle shares it. The
    // projection is the difficulty marginal of the current segment.
    const int sub = subsegment_of(particles.front());
    const int seg = segment_of(sub < kSubsegments ? sub : kSubsegments - 1);
    double counts[3] = {0.0, 0.0, 0.0};
    for (State s : particles)
        counts[segment_difficulty(difficulty_code_of(s), seg)] += 1.0;
    BeliefProjection out;
    for (int d = 0; d < 3; ++d)
        out["p_" + std::to_string(d)] = counts[d] / particles.size();
    return out;
}

State VelocityRegulationModel::reinvigorate(State survivor, Rng& rng) const {
    const int sub = subsegment_of(survivor);
    int code = difficulty_code_of(survivor);
    if (rng.bernoulli(reinvigoration_noise)) {
        const int seg = rng.uniform_int(kSegments);
        int pow3 = 1;
        for (int i = 0; i < seg; ++i) pow3 *= 3;
        const int old = (code / pow3) % 3;
        code += (rng.uniform_int(3) - old) * pow3;
    }
    // Observations never depend on segments the robot has not reached, so
    // their exact posterior stays at the uniform prior. Redrawing them keeps
    // the marginals of future segments from drifting under resampling.
    int pow3 = 1;
    for (int i = 0; i < segment_of(sub); ++i) pow3 *= 3;
    pow3 *= 3;  // first future segment
    const int kept = code % pow3;
    int future = 0;
    for (int mult = pow3; mult < kDifficultyAssignments; mult *= 3)
        future += rng.uniform_int(3) * mult;
    return pack(sub, kept + future);
}

std::string VelocityRegulationModel::params_json() const {
    std::ostringstream os;
    os << "{\"segment_count\":8,\"subsegment_counts\":[";
    for (int i = 0; i < 8; ++i) os << (i ? "," : "") << kSubsegmentCounts[i];
    os << "],\"subsegment_lengths\":[";
    for (int i = 0; i < kSubsegments; ++i) os << (i ? "," : "") << lengths_[i];
    os << "],\"occupancy\":[0,0.5,1],\"collision\":[";
    for (int f = 0; f < 3; ++f) {
        os << (f ? ",[" : "[");
        for (int a = 0; a < 3; ++a) os << (a ? "," : "") << collision_[f][a];
        os << "]";
    }
    char tail[96];
    std::snprintf(tail, sizeof(tail), "],\"collision_penalty\":%g,\"discount\":%g}",
                  collision_penalty_, gamma_);
    os << tail;
    return os.str();
}

}  // namespace xpomcp
