#pragma once

#include <array>

#include "xpomcp/pomdp.hpp"

namespace xpomcp {

// Velocity regulation on the eight-segment path. Hidden state: one
// difficulty in {0,1,2} per segment (3^8 = 6561 assignments). Observable
// state: the index of the current subsegment (0..35, 35 = done), which also
// determines the elapsed time. State packing: subsegment * 6561 + difficulty
// code (base-3, segment 0 least significant).
//
// Actions are speed levels 0/1/2. Traversing a subsegment yields
// length * (1 + a), minus the collision penalty when a collision is sampled;
// a collision does not end the run. The occupancy observation is sampled
// from the difficulty of the traversed subsegment's segment.
class VelocityRegulationModel : public PomdpModel {
public:
    static constexpr int kSegments = 8;
    static constexpr int kSubsegments = 35;
    static constexpr int kDifficultyAssignments = 6561;  // 3^8

    using CollisionTable = std::array<std::array<double, 3>, 3>;

    // Default collision probabilities p(c=1 | f, a).
    static CollisionTable default_collision_table();

    VelocityRegulationModel(double gamma = 0.95,
                            double collision_penalty = -100.0);
    VelocityRegulationModel(double gamma, double collision_penalty,
                            const CollisionTable& collision);

    std::string id() const override { return "velocity-regulation"; }
    int action_count() const override { return 3; }
    int observation_count() const override { return 2; }
    double discount() const override { return gamma_; }
    int horizon() const override { return kSubsegments; }

    State sample_initial_state(Rng& rng) const override;
    StepResult step(State state, int action, Rng& rng) const override;
    BeliefProjection belief_projection(
        const std::vector<State>& particles) const override;
    State reinvigorate(State survivor, Rng& rng) const override;
    std::string params_json() const override;

    static State pack(int subsegment, int difficulty_code) {
        return static_cast<State>(subsegment) * kDifficultyAssignments +
               static_cast<State>(difficulty_code);
    }
    static int subsegment_of(State s) {
        return static_cast<int>(s / kDifficultyAssignments);
    }
    static int difficulty_code_of(State s) {
        return static_cast<int>(s % kDifficultyAssignments);
    }
    static int segment_difficulty(int difficulty_code, int segment) {
        for (int i = 0; i < segment; ++i) difficulty_code /= 3;
        return difficulty_code % 3;
    }
    // Segment containing a subsegment index.
    static int segment_of(int subsegment);

    double subsegment_length(int subsegment) const {
        return lengths_[subsegment];
    }
    double occupancy_probability(int difficulty) const {
        return occupancy_[difficulty];
    }
    double collision_probability(int difficulty, int action) const {
        return collision_[difficulty][action];
    }
    double collision_penalty() const { return collision_penalty_; }

    // Probability of re-randomizing one segment's difficulty when a
    // survivor is resampled during reinvigoration.
    double reinvigoration_noise = 0.1;

private:
    double gamma_;
    double collision_penalty_;
    std::array<double, kSubsegments> lengths_;
    std::array<double, 3> occupancy_;
    CollisionTable collision_;
};

}  // namespace xpomcp
