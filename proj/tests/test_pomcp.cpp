#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "xpomcp/errors.hpp"
#include "xpomcp/pomcp.hpp"
#include "xpomcp/tiger.hpp"
#include "xpomcp/velocity.hpp"

using namespace xpomcp;

namespace {

PlannerConfig tiger_config(std::uint64_t seed, double W = 110.0) {
    PlannerConfig config;
    config.particle_count = 1 << 13;
    config.simulations_per_step = 1 << 13;
    config.reward_range = W;
    config.seed = seed;
    return config;
}

}  // namespace

TEST_CASE("tiger: a well-tuned planner listens under a uniform belief") {
    const auto model = make_model("tiger");
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        Pomcp planner(model, tiger_config(seed), Rng(seed));
        CHECK(planner.plan_action() == TigerModel::kListen);
    }
}

TEST_CASE("tiger: three hear-right observations justify opening left") {
    const auto model = make_model("tiger");
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Pomcp planner(model, tiger_config(seed), Rng(seed));
        for (int i = 0; i < 3; ++i) {
            planner.plan_action();
            planner.update_belief(TigerModel::kListen, /*hear-right*/ 1);
        }
        CHECK(planner.root_belief().at("p_right") > 0.95);
        CHECK(planner.plan_action() == TigerModel::kOpenLeft);
    }
}

TEST_CASE("particle filter tracks the Bayes posterior of listening") {
    // Closed form: one hear-left takes a uniform belief to 0.85, a second
    // to 0.85^2 / (0.85^2 + 0.15^2) = 0.9698.
    const auto model = make_model("tiger");
    PlannerConfig config = tiger_config(21);
    config.particle_count = 1 << 15;
    Pomcp planner(model, config, Rng(99));
    CHECK(planner.root_belief().at("p_left") == doctest::Approx(0.5).epsilon(0.04));

    planner.update_belief(TigerModel::kListen, /*hear-left*/ 0);
    CHECK(std::abs(planner.root_belief().at("p_left") - 0.85) < 0.02);

    planner.update_belief(TigerModel::kListen, 0);
    CHECK(std::abs(planner.root_belief().at("p_left") - 0.9698) < 0.02);

    CHECK(static_cast<int>(planner.root().particles.size()) ==
          config.particle_count);
    CHECK(planner.steps_done() == 2);
}

TEST_CASE("planning is deterministic under a fixed seed") {
    const auto model = make_model("tiger");
    auto run = [&](std::uint64_t seed) {
        Pomcp planner(model, tiger_config(seed, 40.0), Rng(seed));
        std::vector<int> actions;
        for (int i = 0; i < 3; ++i) {
            actions.push_back(planner.plan_action());
            planner.update_belief(TigerModel::kListen, i % 2);
        }
        actions.push_back(
            static_cast<int>(1e6 * planner.root_belief().at("p_left")));
        return actions;
    };
    CHECK(run(5) == run(5));
    CHECK(run(5) != run(6));
}

TEST_CASE("a single simulation per step still returns a legal action") {
    const auto model = make_model("tiger");
    PlannerConfig config = tiger_config(3);
    config.simulations_per_step = 1;
    Pomcp planner(model, config, Rng(3));
    const int action = planner.plan_action();
    CHECK(action >= 0);
    CHECK(action < model->action_count());
}

TEST_CASE("planner configuration is validated") {
    const auto model = make_model("tiger");
    PlannerConfig bad = tiger_config(0);
    bad.particle_count = 0;
    CHECK_THROWS_AS(Pomcp(model, bad, Rng(0)), ContractError);
    bad = tiger_config(0);
    bad.reward_range = 0.0;
    CHECK_THROWS_AS(Pomcp(model, bad, Rng(0)), ContractError);
}

TEST_CASE("velocity: an occupied observation shifts belief to hard difficulty") {
    const auto model = make_model("velocity-regulation");
    PlannerConfig config;
    config.particle_count = 1 << 14;
    config.simulations_per_step = 1;  // only the filter matters here
    config.reward_range = 90.0;
    config.seed = 8;
    Pomcp planner(model, config, Rng(8));
    planner.update_belief(/*slow*/ 0, /*occupied*/ 1);
    const BeliefProjection b = planner.root_belief();
    // Still inside segment 0: difficulty 0 cannot produce an occupied
    // observation, and difficulty 2 is twice as likely as difficulty 1.
    CHECK(b.at("p_0") < 0.05);
    CHECK(b.at("p_2") > 0.55);
    CHECK(b.at("p_0") + b.at("p_1") + b.at("p_2") == doctest::Approx(1.0));
}

TEST_CASE("run_episode records one step per decision") {
    const auto model = make_model("tiger");
    PlannerConfig config = tiger_config(17, 65.0);
    config.simulations_per_step = 512;  // keep the test quick
    const auto steps = run_episode(*model, config, /*run_id*/ 3);
    REQUIRE(!steps.empty());
    CHECK(static_cast<int>(steps.size()) <= model->horizon());
    for (std::size_t i = 0; i < steps.size(); ++i) {
        CHECK(steps[i].run_id == 3);
        CHECK(steps[i].step_index == static_cast<int>(i));
        CHECK(steps[i].belief.at("p_left") + steps[i].belief.at("p_right") ==
              doctest::Approx(1.0));
    }
    // Tiger runs end by opening a door (or hit the horizon listening).
    if (static_cast<int>(steps.size()) < model->horizon())
        CHECK(steps.back().action != TigerModel::kListen);
}

TEST_CASE("simulate_trace derives independent per-run seeds") {
    const auto model = make_model("tiger");
    PlannerConfig config = tiger_config(1, 65.0);
    config.simulations_per_step = 512;
    const Trace trace = simulate_trace(model, config, 4);
    CHECK(trace.header.model_id == "tiger");
    CHECK(trace.header.w == doctest::Approx(65.0));
    CHECK(trace.header.seed == 1);
    std::set<int> runs;
    for (const TraceStep& s : trace.steps) runs.insert(s.run_id);
    CHECK(runs == std::set<int>{0, 1, 2, 3});

    // Identical config reproduces identical steps (headers differ by time).
    const Trace again = simulate_trace(model, config, 4);
    CHECK(again.steps == trace.steps);
}
