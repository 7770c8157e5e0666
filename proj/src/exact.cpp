#include "xpomcp/exact.hpp"

#include <algorithm>
#include <cmath>

#include "xpomcp/errors.hpp"

#include <json.hpp>

namespace xpomcp {

TabularPomdp tiger_tabular(double gamma, double hear_accuracy,
                           double reward_treasure, double reward_tiger,
                           double reward_listen) {
    TabularPomdp m;
    m.n_states = 2;
    m.n_actions = 3;
    m.n_observations = 2;
    m.discount = gamma;
    m.state_names = {"tiger-left", "tiger-right"};
    m.safe_action = 0;  // listen
    m.action_terminal = {false, true, true};
    m.transition.assign(2, std::vector<std::vector<double>>(
                               3, std::vector<double>(2, 0.0)));
    m.observation.assign(3, std::vector<std::vector<double>>(
                                2, std::vector<double>(2, 0.5)));
    m.reward.assign(2, std::vector<double>(3, 0.0));
    for (int s = 0; s < 2; ++s) {
        m.transition[s][0][s] = 1.0;  // listen keeps the state
        m.transition[s][1][s] = 1.0;  // open actions terminate; self-loop is
        m.transition[s][2][s] = 1.0;  // irrelevant but keeps rows stochastic
        // listen observation: hear the correct side with hear_accuracy
        m.observation[0][s][s] = hear_accuracy;
        m.observation[0][s][1 - s] = 1.0 - hear_accuracy;
        m.reward[s][0] = reward_listen;
        m.reward[s][1] = (s == 0) ? reward_tiger : reward_treasure;
        m.reward[s][2] = (s == 1) ? reward_tiger : reward_treasure;
    }
    return m;
}

namespace {

constexpr double kEps = 1e-9;

bool pointwise_dominated(const AlphaVector& a, const AlphaVector& b) {
    for (std::size_t i = 0; i < a.values.size(); ++i)
        if (a.values[i] > b.values[i] + kEps) return false;
    return true;
}

// Pairwise dominance pruning; valid for any |S| but not minimal for |S| > 2.
void prune_pairwise(std::vector<AlphaVector>& set) {
    std::vector<AlphaVector> kept;
    for (std::size_t i = 0; i < set.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < set.size() && !dominated; ++j) {
            if (i == j) continue;
            if (pointwise_dominated(set[i], set[j])) {
                // Tie handling: identical vectors keep only the first copy.
                if (pointwise_dominated(set[j], set[i]))
                    dominated = j < i;
                else
                    dominated = true;
            }
        }
        if (!dominated) kept.push_back(set[i]);
    }
    set.swap(kept);
}

// Exact upper-envelope pruning on the 1-D belief simplex (|S| = 2): a vector
// survives iff it is strictly best somewhere, checked at the vertices and at
// every pairwise crossing point.
void prune_envelope_2d(std::vector<AlphaVector>& set) {
    if (set.size() <= 1) return;
    std::vector<double> probes = {0.0, 1.0};
    for (std::size_t i = 0; i < set.size(); ++i)
        for (std::size_t j = i + 1; j < set.size(); ++j) {
            const double di = set[i].values[1] - set[i].values[0];
            const double dj = set[j].values[1] - set[j].values[0];
            if (std::abs(di - dj) < kEps) continue;
            const double p = (set[j].values[0] - set[i].values[0]) / (di - dj);
            if (p > 0.0 && p < 1.0) probes.push_back(p);
        }
    std::vector<char> best_somewhere(set.size(), 0);
    for (double p : probes) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < set.size(); ++i) {
            const double v = set[i].values[0] * (1.0 - p) + set[i].values[1] * p;
            if (v > best + kEps) {
                best = v;
                arg = i;
            }
        }
        best_somewhere[arg] = 1;
    }
    std::vector<AlphaVector> kept;
    for (std::size_t i = 0; i < set.size(); ++i)
        if (best_somewhere[i]) kept.push_back(set[i]);
    set.swap(kept);
}

void prune(std::vector<AlphaVector>& set, int n_states) {
    if (n_states == 2)
        prune_envelope_2d(set);
    else
        prune_pairwise(set);
}

}  // namespace

ExactPolicy solve(const TabularPomdp& model, int horizon) {
    if (model.n_states > 16)
        throw ContractError("exact: state space too large for tabular solve");
    ExactPolicy policy;
    policy.horizon = horizon;
    policy.discount = model.discount;
    policy.safe_action = model.safe_action;
    policy.sets.resize(horizon + 1);
    policy.sets[0] = {AlphaVector{std::vector<double>(model.n_states, 0.0),
                                  model.safe_action}};

    for (int h = 1; h <= horizon; ++h) {
        const auto& prev = policy.sets[h - 1];
        std::vector<AlphaVector> merged;
        for (int a = 0; a < model.n_actions; ++a) {
            std::vector<AlphaVector> gamma_a = {
                AlphaVector{std::vector<double>(model.n_states), a}};
            for (int s = 0; s < model.n_states; ++s)
                gamma_a[0].values[s] = model.reward[s][a];
            if (!model.action_terminal[a]) {
                for (int z = 0; z < model.n_observations; ++z) {
                    // Back-projections of the previous set through (a, z).
                    std::vector<AlphaVector> gamma_az;
                    gamma_az.reserve(prev.size());
                    for (const AlphaVector& alpha : prev) {
                        AlphaVector g{std::vector<double>(model.n_states, 0.0), a};
                        for (int s = 0; s < model.n_states; ++s) {
                            double v = 0.0;
                            for (int sp = 0; sp < model.n_states; ++sp)
                                v += model.transition[s][a][sp] *
                                     model.observation[a][sp][z] *
                                     alpha.values[sp];
                            g.values[s] = model.discount * v;
                        }
                        gamma_az.push_back(std::move(g));
                    }
                    prune(gamma_az, model.n_states);
                    // Incremental cross-sum: prune after each observation.
                    std::vector<AlphaVector> crossed;
                    crossed.reserve(gamma_a.size() * gamma_az.size());
                    for (const AlphaVector& u : gamma_a)
                        for (const AlphaVector& v : gamma_az) {
                            AlphaVector w{u.values, a};
                            for (int s = 0; s < model.n_states; ++s)
                                w.values[s] += v.values[s];
                            crossed.push_back(std::move(w));
                        }
                    prune(crossed, model.n_states);
                    gamma_a.swap(crossed);
                }
            }
            merged.insert(merged.end(), gamma_a.begin(), gamma_a.end());
        }
        prune(merged, model.n_states);
        policy.sets[h] = std::move(merged);
    }
    return policy;
}

namespace {
const std::vector<AlphaVector>& set_for(const ExactPolicy& policy,
                                        int steps_remaining) {
    int h = std::clamp(steps_remaining, 0, policy.horizon);
    return policy.sets[h];
}
}  // namespace

int optimal_action(const ExactPolicy& policy, const std::vector<double>& belief,
                   int steps_remaining) {
    const auto& set = set_for(policy, steps_remaining);
    double best = -std::numeric_limits<double>::infinity();
    int action = policy.safe_action;
    for (const AlphaVector& alpha : set) {
        double v = 0.0;
        for (std::size_t s = 0; s < belief.size(); ++s)
            v += alpha.values[s] * belief[s];
        if (v > best) {
            best = v;
            action = alpha.action;
        }
    }
    // Ties (within 1e-9) go to the safe action.
    for (const AlphaVector& alpha : set) {
        if (alpha.action != policy.safe_action) continue;
        double v = 0.0;
        for (std::size_t s = 0; s < belief.size(); ++s)
            v += alpha.values[s] * belief[s];
        if (v >= best - kEps) return policy.safe_action;
    }
    return action;
}

double optimal_value(const ExactPolicy& policy, const std::vector<double>& belief,
                     int steps_remaining) {
    const auto& set = set_for(policy, steps_remaining);
    double best = -std::numeric_limits<double>::infinity();
    for (const AlphaVector& alpha : set) {
        double v = 0.0;
        for (std::size_t s = 0; s < belief.size(); ++s)
            v += alpha.values[s] * belief[s];
        best = std::max(best, v);
    }
    return best;
}

Trace label_trace(const Trace& trace, const ExactPolicy& policy) {
    if (trace.header.model_id != "tiger")
        throw ValidationError(
            "exact labels are only available for the tiger model (the "
            "velocity-regulation exact solution is intractable)");
    Trace out = trace;
    for (TraceStep& s : out.steps) {
        auto left = s.belief.find("p_left");
        auto right = s.belief.find("p_right");
        if (left == s.belief.end() || right == s.belief.end())
            throw ValidationError("tiger trace step lacks p_left/p_right");
        const std::vector<double> belief = {left->second, right->second};
        s.optimal_action =
            optimal_action(policy, belief, policy.horizon - s.step_index);
    }
    return out;
}

std::string policy_to_json(const ExactPolicy& policy) {
    nlohmann::ordered_json j;
    j["horizon"] = policy.horizon;
    j["discount"] = policy.discount;
    j["safe_action"] = policy.safe_action;
    auto sets = nlohmann::ordered_json::array();
    for (const auto& set : policy.sets) {
        auto js = nlohmann::ordered_json::array();
        for (const AlphaVector& a : set)
            js.push_back({{"action", a.action}, {"values", a.values}});
        sets.push_back(js);
    }
    j["alpha_sets"] = sets;
    return j.dump(2);
}

ExactPolicy policy_from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("policy: not valid JSON");
    ExactPolicy p;
    p.horizon = j.at("horizon").get<int>();
    p.discount = j.at("discount").get<double>();
    p.safe_action = j.at("safe_action").get<int>();
    for (const auto& js : j.at("alpha_sets")) {
        std::vector<AlphaVector> set;
        for (const auto& ja : js)
            set.push_back(AlphaVector{ja.at("values").get<std::vector<double>>(),
                                      ja.at("action").get<int>()});
        p.sets.push_back(std::move(set));
    }
    return p;
}

}  // namespace xpomcp
