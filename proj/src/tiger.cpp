#include "xpomcp/tiger.hpp"

#include <cstdio>

#include "xpomcp/errors.hpp"

namespace xpomcp {

TigerModel::TigerModel(double hear_accuracy, double reward_treasure,
                       double reward_tiger, double reward_listen, double gamma,
                       int max_steps)
    : hear_accuracy_(hear_accuracy),
      reward_treasure_(reward_treasure),
      reward_tiger_(reward_tiger),
      reward_listen_(reward_listen),
      gamma_(gamma),
      max_steps_(max_steps) {
    if (hear_accuracy < 0.0 || hear_accuracy > 1.0)
        throw ContractError("tiger: hear accuracy must be a probability");
    if (gamma <= 0.0 || gamma > 1.0)
        throw ContractError("tiger: discount must be in (0,1]");
}

State TigerModel::sample_initial_state(Rng& rng) const {
    return rng.bernoulli(0.5) ? 1 : 0;
}

StepResult TigerModel::step(State state, int action, Rng& rng) const {
    if (state > 1) throw ContractError("tiger: bad state encoding");
    if (action < 0 || action >= 3)
        throw ContractError("tiger: action out of range: " +
                            std::to_string(action));
    StepResult r;
    if (action == kListen) {
        r.next = state;
        const int true_side = static_cast<int>(state);  // 0 left, 1 right
        r.observation = rng.bernoulli(hear_accuracy_) ? true_side : 1 - true_side;
        r.reward = reward_listen_;
        r.terminal = false;
        return r;
    }
    const bool tiger_behind = (action == kOpenLeft) == (state == 0);
    r.next = state;
    r.observation = rng.bernoulli(0.5) ? 1 : 0;  // uninformative
    r.reward = tiger_behind ? reward_tiger_ : reward_treasure_;
    r.terminal = true;
    return r;
}

BeliefProjection TigerModel::belief_projection(
    const std::vector<State>& particles) const {
    if (particles.empty())
        throw ContractError("tiger: belief projection of an empty particle set");
    std::size_t left = 0;
    for (State s : particles) left += (s == 0);
    const double p_left = static_cast<double>(left) / particles.size();
    return {{"p_left", p_left}, {"p_right", 1.0 - p_left}};
}

std::string TigerModel::params_json() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "{\"hear_accuracy\":%g,\"reward_treasure\":%g,"
                  "\"reward_tiger\":%g,\"reward_listen\":%g,"
                  "\"discount\":%g,\"max_steps\":%d}",
                  hear_accuracy_, reward_treasure_, reward_tiger_,
                  reward_listen_, gamma_, max_steps_);
    return buf;
}

}  // namespace xpomcp
