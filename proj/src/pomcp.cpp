#include "xpomcp/pomcp.hpp"

#include <cmath>
#include <ctime>

#include "xpomcp/errors.hpp"

namespace xpomcp {

namespace {
// Simulations deeper than this contribute less than 1% of a unit reward.
int discount_horizon(double gamma) {
    if (gamma >= 1.0) return 1 << 20;
    return static_cast<int>(std::ceil(std::log(0.01) / std::log(gamma)));
}
}  // namespace

Pomcp::Pomcp(std::shared_ptr<const PomdpModel> model,
             const PlannerConfig& config, Rng rng)
    : model_(std::move(model)), config_(config), rng_(rng) {
    if (config_.particle_count < 1)
        throw ContractError("pomcp: particle count must be >= 1");
    if (config_.reward_range <= 0.0)
        throw ContractError("pomcp: reward range W must be > 0");
    if (config_.max_steps <= 0) config_.max_steps = model_->horizon();
    root_ = std::make_unique<BeliefNode>();
    root_->particles.reserve(config_.particle_count);
    for (int i = 0; i < config_.particle_count; ++i)
        root_->particles.push_back(model_->sample_initial_state(rng_));
}

int Pomcp::max_search_depth() const {
    const int remaining = config_.max_steps - steps_done_;
    return std::min(remaining, discount_horizon(model_->discount()));
}

int Pomcp::select_ucb(BeliefNode& node) const {
    const int n_actions = model_->action_count();
    // Visit every action once before applying the UCB bonus.
    for (int a = 0; a < n_actions; ++a)
        if (node.actions[a]->visits == 0) return a;
    const double log_n = std::log(static_cast<double>(node.visits));
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_actions; ++a) {
        const ActionNode& an = *node.actions[a];
        // Hoeffding/UCB1 bonus for returns spanning reward_range (W):
        // W * sqrt(log N / (2 n)).
        const double ucb =
            an.value +
            config_.reward_range * std::sqrt(log_n / (2.0 * an.visits));
        if (ucb > best_v) {
            best_v = ucb;
            best = a;
        }
    }
    return best;
}

double Pomcp::rollout(State state, int depth) {
    double total = 0.0;
    double scale = 1.0;
    const int limit = max_search_depth();
    const double gamma = model_->discount();
    while (depth < limit) {
        const int action = rng_.uniform_int(model_->action_count());
        const StepResult r = model_->step(state, action, rng_);
        total += scale * r.reward;
        if (r.terminal) break;
        state = r.next;
        scale *= gamma;
        ++depth;
    }
    return total;
}

double Pomcp::simulate(State state, BeliefNode& node, int depth) {
    if (depth >= max_search_depth()) return 0.0;
    if (node.actions.empty()) {
        node.actions.reserve(model_->action_count());
        for (int a = 0; a < model_->action_count(); ++a)
            node.actions.push_back(std::make_unique<ActionNode>());
    }
    const int action = select_ucb(node);
    ActionNode& an = *node.actions[action];
    const StepResult r = model_->step(state, action, rng_);

    double ret = r.reward;
    if (!r.terminal) {
        auto it = an.children.find(r.observation);
        if (it == an.children.end()) {
            // Expand one leaf per simulation, then estimate with a rollout.
            auto child = std::make_unique<BeliefNode>();
            child->particles.push_back(r.next);
            an.children.emplace(r.observation, std::move(child));
            ret += model_->discount() * rollout(r.next, depth + 1);
        } else {
            BeliefNode& child = *it->second;
            child.particles.push_back(r.next);
            ret += model_->discount() * simulate(r.next, child, depth + 1);
        }
    }
    ++node.visits;
    ++an.visits;
    an.value += (ret - an.value) / an.visits;
    return ret;
}

int Pomcp::plan_action() {
    if (root_->particles.empty())
        throw ParticleDeprivationError("pomcp: empty root particle set");
    for (int i = 0; i < config_.simulations_per_step; ++i) {
        const State s =
            root_->particles[rng_.uniform_int(root_->particles.size())];
        simulate(s, *root_, 0);
    }
    // Final choice is greedy on value; ties break to the lowest index.
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < model_->action_count(); ++a) {
        const ActionNode& an = *root_->actions[a];
        if (an.visits == 0) continue;
        if (an.value > best_v) {
            best_v = an.value;
            best = a;
        }
    }
    return best;
}

void Pomcp::update_belief(int action, int observation) {
    std::vector<State> filtered;
    filtered.reserve(config_.particle_count);

    // Reuse the states collected under the matching branch during search.
    if (!root_->actions.empty()) {
        auto it = root_->actions[action]->children.find(observation);
        if (it != root_->actions[action]->children.end()) {
            const auto& p = it->second->particles;
            const std::size_t take =
                std::min(p.size(), static_cast<std::size_t>(config_.particle_count));
            filtered.assign(p.begin(), p.begin() + take);
        }
    }

    // Fill by rejection from the previous filter.
    const long attempt_budget = 64L * config_.particle_count;
    long attempts = 0;
    while (static_cast<int>(filtered.size()) < config_.particle_count &&
           attempts < attempt_budget) {
        ++attempts;
        const State s =
            root_->particles[rng_.uniform_int(root_->particles.size())];
        const StepResult r = model_->step(s, action, rng_);
        if (r.observation == observation) filtered.push_back(r.next);
    }
    if (filtered.empty())
        throw ParticleDeprivationError(
            "pomcp: no particle survived the (action, observation) filter");

    // Top up from resampled survivors, then pass the whole filter through
    // the model's reinvigoration noise. The noise keeps a small floor under
    // every hidden-state hypothesis so beliefs never collapse to exact 0/1
    // from a single zero-likelihood observation.
    const std::size_t survivors = filtered.size();
    while (static_cast<int>(filtered.size()) < config_.particle_count) {
        const State s = filtered[rng_.uniform_int(survivors)];
        filtered.push_back(s);
    }
    for (State& s : filtered) s = model_->reinvigorate(s, rng_);

    auto new_root = std::make_unique<BeliefNode>();
    if (!root_->actions.empty()) {
        auto it = root_->actions[action]->children.find(observation);
        if (it != root_->actions[action]->children.end()) {
            // Keep the subtree's statistics (standard POMCP tree reuse).
            new_root->visits = it->second->visits;
            new_root->actions = std::move(it->second->actions);
        }
    }
    new_root->particles = std::move(filtered);
    root_ = std::move(new_root);
    ++steps_done_;
}

BeliefProjection Pomcp::root_belief() const {
    return model_->belief_projection(root_->particles);
}

std::vector<TraceStep> run_episode(const PomdpModel& model,
                                   const PlannerConfig& config, int run_id) {
    auto shared = std::shared_ptr<const PomdpModel>(&model, [](const PomdpModel*) {});
    Rng world(Rng::derive(config.seed, 2 * run_id));
    Pomcp planner(shared, config, Rng(Rng::derive(config.seed, 2 * run_id + 1)));

    std::vector<TraceStep> steps;
    State state = model.sample_initial_state(world);
    const int max_steps = config.max_steps > 0 ? config.max_steps : model.horizon();
    for (int t = 0; t < max_steps; ++t) {
        TraceStep ts;
        ts.run_id = run_id;
        ts.step_index = t;
        ts.belief = planner.root_belief();
        if (config.record_particle_histograms) {
            std::map<std::uint64_t, int> hist;
            for (State s : planner.root().particles) ++hist[s];
            ts.particle_histogram = std::move(hist);
        }
        const int action = planner.plan_action();
        ts.action = action;
        steps.push_back(std::move(ts));

        const StepResult r = model.step(state, action, world);
        if (r.terminal) break;
        state = r.next;
        planner.update_belief(action, r.observation);
    }
    return steps;
}

Trace simulate_trace(std::shared_ptr<const PomdpModel> model,
                     const PlannerConfig& config, int runs) {
    Trace trace;
    trace.header.model_id = model->id();
    trace.header.model_params_hash = params_hash(model->params_json());
    trace.header.w = config.reward_range;
    trace.header.particle_count = config.particle_count;
    trace.header.seed = config.seed;
    {
        char buf[32];
        std::time_t now = std::time(nullptr);
        std::tm tm{};
        gmtime_r(&now, &tm);
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
        trace.header.created_at = buf;
    }
    for (int run = 0; run < runs; ++run) {
        PlannerConfig per_run = config;
        per_run.seed = Rng::derive(config.seed, 1000003ULL + run);
        auto steps = run_episode(*model, per_run, run);
        trace.steps.insert(trace.steps.end(), steps.begin(), steps.end());
    }
    return trace;
}

}  // namespace xpomcp
