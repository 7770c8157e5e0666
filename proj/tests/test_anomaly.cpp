#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "xpomcp/anomaly.hpp"
#include "xpomcp/errors.hpp"
#include "xpomcp/rng.hpp"
#include "xpomcp/studies.hpp"

using namespace xpomcp;

namespace {

std::vector<double> dirichlet3(Rng& rng) {
    const double a = rng.exponential(), b = rng.exponential(),
                 c = rng.exponential();
    const double t = a + b + c;
    return {a / t, b / t, 1.0 - a / t - b / t};
}

TraceStep velocity_step(int action, double p0, double p1, int run = 0,
                        int index = 0) {
    TraceStep s;
    s.run_id = run;
    s.step_index = index;
    s.action = action;
    s.belief = {{"p_0", p0}, {"p_1", p1}, {"p_2", 1.0 - p0 - p1}};
    return s;
}

LearnedRule reference_rule() {
    return {parse_template(velocity_template_text()),
            {{"x1", 0.910}, {"x2", 0.013}, {"x3", 0.838}, {"x4", 0.132}}};
}

}  // namespace

TEST_CASE("hellinger: tagged examples") {
    // Identical distributions are at distance zero.
    CHECK(hellinger({0.5, 0.5}, {0.5, 0.5}) == doctest::Approx(0.0).epsilon(1e-9));
    // Disjoint point masses are at the maximum distance.
    CHECK(hellinger({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-9));
    // A uniform Tiger belief against a confident one.
    CHECK(hellinger({0.5, 0.5}, {0.85, 0.15}) ==
          doctest::Approx(0.2724307).epsilon(1e-4));
}

TEST_CASE("hellinger: contract checks") {
    CHECK_THROWS_AS(hellinger({0.5, 0.5}, {1.0}), ContractError);
    CHECK_THROWS_AS(hellinger({}, {}), ContractError);
    CHECK_THROWS_AS(hellinger({0.7, 0.5}, {0.5, 0.5}), ContractError);
    CHECK_THROWS_AS(hellinger({1.5, -0.5}, {0.5, 0.5}), ContractError);
}

TEST_CASE("hellinger: metric properties on 1000 random triples") {
    Rng rng(77);
    for (int i = 0; i < 1000; ++i) {
        const auto p = dirichlet3(rng), q = dirichlet3(rng), r = dirichlet3(rng);
        const double pq = hellinger(p, q);
        CHECK(pq >= 0.0);
        CHECK(pq <= 1.0);
        CHECK(hellinger(q, p) == doctest::Approx(pq).epsilon(1e-12));
        CHECK(hellinger(p, p) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(hellinger(p, r) <= pq + hellinger(q, r) + 1e-12);
    }
}

TEST_CASE("sampling respects the rule region") {
    const std::vector<std::string> names = {"p_0", "p_1", "p_2"};
    const RuleTemplate tmpl =
        parse_template("rule r { action: 0 when: p_0 >= x1 }");
    const std::map<std::string, double> assignment = {{"x1", 0.6}};

    const auto samples = sample_satisfying_beliefs(tmpl.rules[0].body, assignment,
                                                   names, 500, 3);
    CHECK(samples.size() == 500);
    for (const BeliefProjection& b : samples) {
        CHECK(b.at("p_0") >= 0.6);
        CHECK(b.at("p_0") + b.at("p_1") + b.at("p_2") ==
              doctest::Approx(1.0).epsilon(1e-9));
    }

    // An empty body accepts the whole simplex.
    const std::vector<Subformula> empty_body;
    const std::map<std::string, double> no_assignment;
    const auto uniform =
        sample_satisfying_beliefs(empty_body, no_assignment, names, 200, 3);
    CHECK(uniform.size() == 200);

    // A vanishing region is reported, not looped on forever.
    const std::map<std::string, double> extreme = {{"x1", 0.999999}};
    CHECK_THROWS_AS(sample_satisfying_beliefs(tmpl.rules[0].body, extreme, names,
                                              100, 3),
                    UnsatRegionError);

    CHECK_THROWS_AS(
        sample_satisfying_beliefs(empty_body, no_assignment, names, 0, 3),
        ContractError);
    const std::vector<std::string> one_name = {"p"};
    CHECK_THROWS_AS(
        sample_satisfying_beliefs(empty_body, no_assignment, one_name, 10, 3),
        ContractError);
}

TEST_CASE("named-rule sampling wrapper resolves the action rule") {
    const LearnedRule rule = reference_rule();
    const auto samples = sample_satisfying_beliefs(rule, "fast",
                                                   {"p_0", "p_1", "p_2"}, 50, 1);
    CHECK(samples.size() == 50);
    for (const BeliefProjection& b : samples)
        CHECK(eval_body(rule.tmpl.rules[0].body, b, rule.assignment));
    CHECK_THROWS_AS(
        sample_satisfying_beliefs(rule, "slow", {"p_0", "p_1", "p_2"}, 5, 1),
        ContractError);
}

TEST_CASE("a uniform-belief fast decision reproduces the reported distance") {
    // The reference thresholds (0.910, 0.013, 0.838, 0.132) put a
    // near-uniform belief at Hellinger distance ~0.3526 from the fast
    // region; it is unexpected at tau = 0.1.
    AnomalyConfig config;
    config.tau = 0.1;
    config.sample_count = 5000;
    config.seed = 9;
    const AnomalyReport report = classify_violations(
        reference_rule(), {velocity_step(2, 0.335, 0.331)}, config);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0].h == doctest::Approx(0.3526).epsilon(0.1));
    CHECK(std::abs(report.findings[0].h - 0.3526) < 0.03);
    CHECK(report.findings[0].unexpected);
}

TEST_CASE("a boundary violation is graded as rule slack") {
    // A belief just outside the region has a tiny distance and is not
    // unexpected.
    AnomalyConfig config;
    config.tau = 0.1;
    config.sample_count = 5000;
    config.seed = 9;
    const AnomalyReport report = classify_violations(
        reference_rule(), {velocity_step(2, 0.826, 0.160)}, config);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0].h < 0.021);
    CHECK_FALSE(report.findings[0].unexpected);
}

TEST_CASE("tiger: listening just past the bound is near the listen region") {
    LearnedRule rule{parse_template(tiger_template_text()),
                     {{"x1", 0.847}, {"x2", 0.847}, {"x3", 0.966}, {"x4", 0.966}}};
    AnomalyConfig config;
    config.tau = 0.045;
    config.sample_count = 5000;
    config.seed = 4;
    TraceStep step;
    step.action = 0;
    step.belief = {{"p_left", 0.85}, {"p_right", 0.15}};
    const AnomalyReport report = classify_violations(rule, {step}, config);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0].h < 0.01);
    CHECK_FALSE(report.findings[0].unexpected);
}

TEST_CASE("classification is monotone in tau and sorted by distance") {
    std::vector<TraceStep> violations = {
        velocity_step(2, 0.335, 0.331, 0, 0), velocity_step(2, 0.826, 0.160, 0, 1),
        velocity_step(2, 0.500, 0.300, 1, 0), velocity_step(2, 0.100, 0.850, 1, 1)};
    AnomalyConfig low;
    low.tau = 0.05;
    low.sample_count = 2000;
    low.seed = 12;
    AnomalyConfig high = low;
    high.tau = 0.3;

    const AnomalyReport a = classify_violations(reference_rule(), violations, low);
    const AnomalyReport b = classify_violations(reference_rule(), violations, high);
    REQUIRE(a.findings.size() == violations.size());
    auto count = [](const AnomalyReport& r) {
        long n = 0;
        for (const AnomalyFinding& f : r.findings) n += f.unexpected ? 1 : 0;
        return n;
    };
    CHECK(count(a) >= count(b));
    for (std::size_t i = 0; i + 1 < a.findings.size(); ++i)
        CHECK(a.findings[i].h >= a.findings[i + 1].h);
    // Same seed, same samples: only the flags may differ.
    for (std::size_t i = 0; i < a.findings.size(); ++i)
        CHECK(a.findings[i].h == doctest::Approx(b.findings[i].h).epsilon(1e-12));
}

TEST_CASE("more samples can only shrink the estimated distance") {
    // With a fixed seed the first w accepted samples are a prefix of the
    // first 2w, so each step's minimum distance is non-increasing in w.
    const std::vector<TraceStep> violations = {
        velocity_step(2, 0.335, 0.331, 0, 0), velocity_step(2, 0.6, 0.2, 0, 1)};
    AnomalyConfig small;
    small.tau = 0.1;
    small.sample_count = 1000;
    small.seed = 31;
    AnomalyConfig large = small;
    large.sample_count = 2000;

    const AnomalyReport a = classify_violations(reference_rule(), violations, small);
    const AnomalyReport b = classify_violations(reference_rule(), violations, large);
    REQUIRE(a.findings.size() == b.findings.size());
    for (std::size_t i = 0; i < a.findings.size(); ++i) {
        // Findings are sorted; match by (run, step).
        for (const AnomalyFinding& f : b.findings)
            if (f.run_id == a.findings[i].run_id &&
                f.step_index == a.findings[i].step_index)
                CHECK(f.h <= a.findings[i].h + 1e-12);
    }
}

TEST_CASE("steps with an unruled action fall back to the union region") {
    AnomalyConfig config;
    config.tau = 0.2;
    config.sample_count = 5000;
    config.seed = 5;
    // Action 0 has no rule in the velocity template; the step sits inside
    // the fast region, so the union fallback grades it as benign slack.
    const AnomalyReport report = classify_violations(
        reference_rule(), {velocity_step(0, 0.95, 0.03)}, config);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0].h < 0.15);
    CHECK_FALSE(report.findings[0].unexpected);
}

TEST_CASE("report rendering marks anomalies") {
    AnomalyConfig config;
    config.tau = 0.1;
    config.sample_count = 2000;
    config.seed = 9;
    const AnomalyReport report = classify_violations(
        reference_rule(),
        {velocity_step(2, 0.335, 0.331, 3, 14), velocity_step(2, 0.826, 0.160)},
        config);
    const std::string text = report_text(report);
    CHECK(text.find("ANOMALY: run Run_3 step 14:") != std::string::npos);
    CHECK(text.find("--- Hellinger = ") != std::string::npos);
    CHECK(text.find("Unsatisfiable steps:") != std::string::npos);

    const auto j = report_json(report);
    CHECK(j.at("tau").get<double>() == doctest::Approx(0.1));
    CHECK(j.at("violations").size() == 2);
    CHECK(j.at("violations")[0].at("unexpected").get<bool>());
}

TEST_CASE("classify_violations validates its configuration") {
    AnomalyConfig config;
    config.tau = 1.5;
    CHECK_THROWS_AS(classify_violations(reference_rule(), {}, config), ContractError);
    config.tau = 0.1;
    config.sample_count = 0;
    CHECK_THROWS_AS(classify_violations(reference_rule(), {}, config), ContractError);
    config.sample_count = 10;
    CHECK(classify_violations(reference_rule(), {}, config).findings.empty());
}
