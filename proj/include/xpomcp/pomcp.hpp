#pragma once

#include <map>
#include <memory>
#include <vector>

#include "xpomcp/pomdp.hpp"
#include "xpomcp/trace.hpp"

namespace xpomcp {

struct PlannerConfig {
    int particle_count = 1 << 13;
    int simulations_per_step = 1 << 13;
    double reward_range = 110.0;  // W: UCB exploration constant
    int max_steps = 0;            // 0: use the model horizon
    std::uint64_t seed = 0;
    double reinvigoration_fraction = 0.1;
    bool record_particle_histograms = false;
};

struct ActionNode;

// Belief node of the search tree. Particles are the filter at the root and
// the states encountered under this history elsewhere.
struct BeliefNode {
    int visits = 0;
    std::vector<std::unique_ptr<ActionNode>> actions;
    std::vector<State> particles;
};

struct ActionNode {
    int visits = 0;
    double value = 0.0;  // running mean of backed-up discounted returns
    std::map<int, std::unique_ptr<BeliefNode>> children;  // by observation
};

// One search tree over one run; owns the particle filter at its root.
class Pomcp {
public:
    Pomcp(std::shared_ptr<const PomdpModel> model, const PlannerConfig& config,
          Rng rng);

    // Runs simulations_per_step UCT simulations from the root and returns
    // the argmax-by-value action (ties: lowest index).
    int plan_action();

    // Advances the root past (action, observation): filters particles,
    // reinvigorating when the filter comes up short.
    void update_belief(int action, int observation);

    // steps_done is the number of real steps already executed this run.
    int steps_done() const { return steps_done_; }
    const BeliefNode& root() const { return *root_; }
    BeliefProjection root_belief() const;

private:
    double simulate(State state, BeliefNode& node, int depth);
    double rollout(State state, int depth);
    int select_ucb(BeliefNode& node) const;
    int max_search_depth() const;

    std::shared_ptr<const PomdpModel> model_;
    PlannerConfig config_;
    Rng rng_;
    std::unique_ptr<BeliefNode> root_;
    int steps_done_ = 0;
};

// Runs one full episode, recording a TraceStep per decision.
std::vector<TraceStep> run_episode(const PomdpModel& model,
                                   const PlannerConfig& config, int run_id);

// A whole trace: `runs` episodes with per-run derived seeds.
Trace simulate_trace(std::shared_ptr<const PomdpModel> model,
                     const PlannerConfig& config, int runs);

}  // namespace xpomcp
