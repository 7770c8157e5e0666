#pragma once

#include "xpomcp/pomdp.hpp"

namespace xpomcp {

// Classic two-door Tiger. States: 0 = tiger-left, 1 = tiger-right.
// Actions: 0 = listen, 1 = open-left, 2 = open-right.
// Observations: 0 = hear-left, 1 = hear-right.
// Opening a door ends the run; listening never changes the state.
class TigerModel : public PomdpModel {
public:
    static constexpr int kListen = 0;
    static constexpr int kOpenLeft = 1;
    static constexpr int kOpenRight = 2;

    TigerModel(double hear_accuracy = 0.85, double reward_treasure = 10.0,
               double reward_tiger = -100.0, double reward_listen = -1.0,
               double gamma = 0.85, int max_steps = 10);

    std::string id() const override { return "tiger"; }
    int action_count() const override { return 3; }
    int observation_count() const override { return 2; }
    double discount() const override { return gamma_; }
    int horizon() const override { return max_steps_; }

    State sample_initial_state(Rng& rng) const override;
    StepResult step(State state, int action, Rng& rng) const override;
    BeliefProjection belief_projection(
        const std::vector<State>& particles) const override;
    std::string params_json() const override;

    double hear_accuracy() const { return hear_accuracy_; }
    double reward_treasure() const { return reward_treasure_; }
    double reward_tiger() const { return reward_tiger_; }
    double reward_listen() const { return reward_listen_; }

private:
    double hear_accuracy_;
    double reward_treasure_;
    double reward_tiger_;
    double reward_listen_;
    double gamma_;
    int max_steps_;
};

}  // namespace xpomcp
