#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "xpomcp/errors.hpp"
#include "xpomcp/pomdp.hpp"
#include "xpomcp/rng.hpp"
#include "xpomcp/tiger.hpp"
#include "xpomcp/velocity.hpp"

using namespace xpomcp;

TEST_CASE("tiger: initial state is uniform") {
    TigerModel model;
    Rng rng(7);
    int left = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
        if (model.sample_initial_state(rng) == 0) ++left;
    CHECK(std::abs(left / double(n) - 0.5) < 0.02);
}

TEST_CASE("tiger: opening the treasure door pays +10 and terminates") {
    TigerModel model;
    Rng rng(1);
    const StepResult r = model.step(/*tiger-left*/ 0, TigerModel::kOpenRight, rng);
    CHECK(r.reward == doctest::Approx(10.0));
    CHECK(r.terminal);
}

TEST_CASE("tiger: opening the tiger door pays -100 and terminates") {
    TigerModel model;
    Rng rng(1);
    const StepResult r = model.step(0, TigerModel::kOpenLeft, rng);
    CHECK(r.reward == doctest::Approx(-100.0));
    CHECK(r.terminal);
}

TEST_CASE("tiger: listening is accurate with probability 0.85") {
    TigerModel model;
    Rng rng(11);
    const int n = 10000;
    int correct = 0;
    for (int i = 0; i < n; ++i) {
        const StepResult r = model.step(0, TigerModel::kListen, rng);
        CHECK(r.reward == doctest::Approx(-1.0));
        CHECK_FALSE(r.terminal);
        CHECK(r.next == 0);  // listening never moves the tiger
        if (r.observation == 0) ++correct;
    }
    CHECK(std::abs(correct / double(n) - 0.85) < 0.02);
}

TEST_CASE("tiger: contract violations throw") {
    TigerModel model;
    Rng rng(1);
    CHECK_THROWS_AS(model.step(0, 3, rng), ContractError);
    CHECK_THROWS_AS(model.step(0, -1, rng), ContractError);
    CHECK_THROWS_AS(model.step(5, 0, rng), ContractError);
    CHECK_THROWS_AS(model.belief_projection({}), ContractError);
    CHECK_THROWS_AS(TigerModel(1.5), ContractError);
    CHECK_THROWS_AS(TigerModel(0.85, 10, -100, -1, 0.0), ContractError);
}

TEST_CASE("tiger: belief projection counts particles") {
    TigerModel model;
    const BeliefProjection half = model.belief_projection({0, 0, 1, 1});
    CHECK(half.at("p_left") == doctest::Approx(0.5));
    CHECK(half.at("p_right") == doctest::Approx(0.5));
    const BeliefProjection point = model.belief_projection({1, 1, 1});
    CHECK(point.at("p_left") == doctest::Approx(0.0));
    CHECK(point.at("p_right") == doctest::Approx(1.0));
}

TEST_CASE("velocity: initial state starts at subsegment 0 with a random map") {
    VelocityRegulationModel model;
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const State s = model.sample_initial_state(rng);
        CHECK(VelocityRegulationModel::subsegment_of(s) == 0);
        const int code = VelocityRegulationModel::difficulty_code_of(s);
        CHECK(code >= 0);
        CHECK(code < VelocityRegulationModel::kDifficultyAssignments);
    }
}

TEST_CASE("velocity: traversal reward is length * (1 + speed)") {
    VelocityRegulationModel model;
    Rng rng(5);
    // Subsegment 15 opens segment 5 and is 1.4 m long; with difficulty 0 the
    // top speed collides with probability 0.028 under the default table.
    const State s = VelocityRegulationModel::pack(15, 0);
    CHECK(VelocityRegulationModel::segment_of(15) == 5);
    CHECK(model.subsegment_length(15) == doctest::Approx(1.4));
    const int n = 100000;
    int collisions = 0;
    for (int i = 0; i < n; ++i) {
        const StepResult r = model.step(s, 2, rng);
        CHECK(r.observation == 0);  // difficulty 0 is never occupied
        CHECK_FALSE(r.terminal);
        CHECK(VelocityRegulationModel::subsegment_of(r.next) == 16);
        if (r.reward == doctest::Approx(4.2 - 100.0)) {
            ++collisions;
        } else {
            CHECK(r.reward == doctest::Approx(4.2));
        }
    }
    CHECK(std::abs(collisions / double(n) - 0.028) < 0.01);
}

TEST_CASE("velocity: collision and occupancy frequencies match the tables") {
    VelocityRegulationModel model;
    Rng rng(9);
    // Difficulty 2 in segment 0 (code 2), medium speed: p(collision) = 0.14,
    // p(occupied) = 1.
    const State s = VelocityRegulationModel::pack(0, 2);
    const int n = 100000;
    int collisions = 0;
    for (int i = 0; i < n; ++i) {
        const StepResult r = model.step(s, 1, rng);
        CHECK(r.observation == 1);
        if (r.reward < 0.0) ++collisions;
    }
    CHECK(std::abs(collisions / double(n) - 0.14) < 0.01);

    // Difficulty 1 is occupied half the time.
    const State mid = VelocityRegulationModel::pack(0, 1);
    int occupied = 0;
    for (int i = 0; i < n; ++i)
        occupied += model.step(mid, 0, rng).observation;
    CHECK(std::abs(occupied / double(n) - 0.5) < 0.01);
}

TEST_CASE("velocity: the last subsegment terminates the run") {
    VelocityRegulationModel model;
    Rng rng(2);
    const State s = VelocityRegulationModel::pack(34, 0);
    const StepResult r = model.step(s, 0, rng);
    CHECK(r.terminal);
    CHECK_THROWS_AS(model.step(r.next, 0, rng), ContractError);
}

TEST_CASE("velocity: contract violations throw") {
    VelocityRegulationModel model;
    Rng rng(1);
    CHECK_THROWS_AS(model.step(0, 3, rng), ContractError);
    CHECK_THROWS_AS(model.belief_projection({}), ContractError);
    CHECK_THROWS_AS(VelocityRegulationModel(0.0, -100.0), ContractError);
}

TEST_CASE("velocity: belief projection is the current segment's marginal") {
    VelocityRegulationModel model;
    // Subsegment 0 lies in segment 0; the difficulty code's least significant
    // base-3 digit is that segment's difficulty.
    std::vector<State> particles = {
        VelocityRegulationModel::pack(0, 0), VelocityRegulationModel::pack(0, 1),
        VelocityRegulationModel::pack(0, 1), VelocityRegulationModel::pack(0, 2)};
    const BeliefProjection b = model.belief_projection(particles);
    CHECK(b.at("p_0") == doctest::Approx(0.25));
    CHECK(b.at("p_1") == doctest::Approx(0.5));
    CHECK(b.at("p_2") == doctest::Approx(0.25));
    CHECK(b.at("p_0") + b.at("p_1") + b.at("p_2") == doctest::Approx(1.0));
}

TEST_CASE("velocity: reinvigoration preserves the reached prefix") {
    VelocityRegulationModel model;
    model.reinvigoration_noise = 0.0;
    Rng rng(17);
    // At subsegment 10 (segment 3) the difficulties of segments 0..3 are
    // evidence-bearing and must survive reinvigoration untouched.
    const int code = 2 + 3 * 1 + 9 * 0 + 27 * 2;  // segments 0..3
    const State s = VelocityRegulationModel::pack(10, code);
    for (int i = 0; i < 50; ++i) {
        const State r = model.reinvigorate(s, rng);
        CHECK(VelocityRegulationModel::subsegment_of(r) ==
              VelocityRegulationModel::subsegment_of(s));
        const int rc = VelocityRegulationModel::difficulty_code_of(r);
        for (int seg = 0; seg <= 3; ++seg)
            CHECK(VelocityRegulationModel::segment_difficulty(rc, seg) ==
                  VelocityRegulationModel::segment_difficulty(code, seg));
    }
}

TEST_CASE("make_model: registry and config overrides") {
    const auto tiger = make_model("tiger");
    CHECK(tiger->id() == "tiger");
    CHECK(tiger->discount() == doctest::Approx(0.85));
    CHECK(tiger->horizon() == 10);

    const auto velreg = make_model("velocity-regulation");
    CHECK(velreg->action_count() == 3);
    CHECK(velreg->observation_count() == 2);
    CHECK(velreg->horizon() == 35);

    const auto tuned = make_model("tiger", R"({"discount":0.5,"max_steps":4})");
    CHECK(tuned->discount() == doctest::Approx(0.5));
    CHECK(tuned->horizon() == 4);

    CHECK_THROWS_AS(make_model("chess"), ValidationError);
    CHECK_THROWS_AS(make_model("tiger", "not json"), ParseError);
    CHECK_THROWS_AS(make_model("velreg", R"({"collision":[[0,0],[0,0],[0,0]]})"),
                    ValidationError);
}

TEST_CASE("params_hash is a stable function of the parameter text") {
    const auto a = make_model("tiger");
    CHECK(params_hash(a->params_json()) == params_hash(a->params_json()));
    CHECK(params_hash(a->params_json()) !=
          params_hash(make_model("tiger", R"({"discount":0.5})")->params_json()));
    CHECK(params_hash("").size() == 16);
}
