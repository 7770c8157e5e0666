#pragma once

#include <string>
#include <vector>

#include "xpomcp/trace.hpp"

namespace xpomcp {

// Explicit tabular POMDP for exact solution. Actions flagged terminal end
// the episode immediately (only their instant reward counts).
struct TabularPomdp {
    int n_states = 0;
    int n_actions = 0;
    int n_observations = 0;
    double discount = 1.0;
    // transition[s][a][s'], observation[a][s'][z], reward[s][a]
    std::vector<std::vector<std::vector<double>>> transition;
    std::vector<std::vector<std::vector<double>>> observation;
    std::vector<std::vector<double>> reward;
    std::vector<bool> action_terminal;
    int safe_action = 0;  // tie-break target
    std::vector<std::string> state_names;
};

// Tiger as a tabular model; state order matches the belief-name order of the
// simulator projection (0 = tiger-left, 1 = tiger-right).
TabularPomdp tiger_tabular(double gamma, double hear_accuracy = 0.85,
                           double reward_treasure = 10.0,
                           double reward_tiger = -100.0,
                           double reward_listen = -1.0);

struct AlphaVector {
    std::vector<double> values;
    int action = 0;
};

// Finite-horizon value function: sets[h] is the alpha-vector set for h
// decisions to go (sets[0] is the single zero vector).
struct ExactPolicy {
    int horizon = 0;
    double discount = 1.0;
    int safe_action = 0;
    std::vector<std::vector<AlphaVector>> sets;
};

// Finite-horizon value iteration with incremental pruning. Guarded to
// |S| <= 16; pruning is exact on the |S| = 2 simplex, pairwise otherwise.
ExactPolicy solve(const TabularPomdp& model, int horizon);

// Argmax over alpha vectors of the horizon-`steps_remaining` set (clamped to
// the policy horizon). Value ties within 1e-9 go to the safe action.
int optimal_action(const ExactPolicy& policy, const std::vector<double>& belief,
                   int steps_remaining);

double optimal_value(const ExactPolicy& policy, const std::vector<double>& belief,
                     int steps_remaining);

// Fills ground-truth optimal actions for every step of a Tiger trace.
// Throws ValidationError for any other model (the velocity-regulation exact
// solution is out of reach).
Trace label_trace(const Trace& trace, const ExactPolicy& policy);

// Policy (de)serialization for the exact-policy CLI command.
std::string policy_to_json(const ExactPolicy& policy);
ExactPolicy policy_from_json(const std::string& text);

}  // namespace xpomcp
