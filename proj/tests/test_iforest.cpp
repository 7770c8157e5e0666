#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <vector>

#include "xpomcp/errors.hpp"
#include "xpomcp/iforest.hpp"
#include "xpomcp/rng.hpp"

using namespace xpomcp;

namespace {

std::vector<FeatureRow> cluster_with_outlier(std::uint64_t seed, int n = 256) {
    Rng rng(seed);
    std::vector<FeatureRow> rows;
    for (int i = 0; i < n; ++i)
        rows.push_back({0.1 + 0.05 * rng.uniform(), 0.1 + 0.05 * rng.uniform()});
    rows.push_back({0.9, 0.9});  // the outlier, last row
    return rows;
}

}  // namespace

TEST_CASE("make_feature_row appends the scaled action to the belief") {
    TraceStep step;
    step.action = 2;
    step.belief = {{"p_0", 0.2}, {"p_1", 0.3}, {"p_2", 0.5}};
    const FeatureRow row = make_feature_row(step, 3);
    REQUIRE(row.size() == 4);
    CHECK(row[0] == doctest::Approx(0.2));
    CHECK(row[2] == doctest::Approx(0.5));
    CHECK(row[3] == doctest::Approx(1.0));  // action 2 of {0,1,2}
    step.action = 0;
    CHECK(make_feature_row(step, 3)[3] == doctest::Approx(0.0));
    CHECK(make_feature_row(step, 1)[3] == doctest::Approx(0.0));
    CHECK_THROWS_AS(make_feature_row(step, 0), ContractError);
}

TEST_CASE("identical rows are indistinguishable and score 0.5") {
    std::vector<FeatureRow> rows(100, FeatureRow{0.3, 0.7});
    const IsolationForest forest = fit_isolation_forest(rows, {});
    const auto scores = score_rows(forest, rows);
    for (double s : scores) CHECK(s == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("an isolated point scores above the cluster across seeds") {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto rows = cluster_with_outlier(seed);
        IsolationForestConfig config;
        config.seed = seed;
        const IsolationForest forest = fit_isolation_forest(rows, config);
        const auto scores = score_rows(forest, rows);
        const double outlier = scores.back();
        const double cluster_max =
            *std::max_element(scores.begin(), scores.end() - 1);
        if (outlier > cluster_max) ++wins;
        for (double s : scores) {
            CHECK(s > 0.0);
            CHECK(s < 1.0);
        }
    }
    CHECK(wins >= 18);
}

TEST_CASE("scoring is deterministic under a fixed seed") {
    const auto rows = cluster_with_outlier(5);
    IsolationForestConfig config;
    config.seed = 123;
    const auto a = score_rows(fit_isolation_forest(rows, config), rows);
    const auto b = score_rows(fit_isolation_forest(rows, config), rows);
    CHECK(a == b);
    config.seed = 124;
    const auto c = score_rows(fit_isolation_forest(rows, config), rows);
    CHECK(a != c);
}

TEST_CASE("detect_anomalies flags ceil(contamination * n) rows") {
    const auto rows = cluster_with_outlier(7, /*n=*/9);  // 10 rows total
    const IsolationForest forest = fit_isolation_forest(rows, {});

    auto flagged_count = [&](double contamination) {
        const auto flags = detect_anomalies(forest, rows, contamination);
        return std::count(flags.begin(), flags.end(), true);
    };
    CHECK(flagged_count(0.5) == 5);
    CHECK(flagged_count(0.05) == 1);   // ceil(0.5) = 1
    CHECK(flagged_count(0.001) == 1);  // any positive rate flags at least one

    // The flagged count is monotone in the contamination rate.
    long prev = 0;
    for (double c : {0.1, 0.2, 0.3, 0.4, 0.5}) {
        const long n = flagged_count(c);
        CHECK(n >= prev);
        prev = n;
    }

    // The single highest-scoring row at the smallest rate is the outlier.
    const auto flags = detect_anomalies(forest, rows, 0.05);
    CHECK(flags.back());

    CHECK_THROWS_AS(detect_anomalies(forest, rows, 0.0), ContractError);
    CHECK_THROWS_AS(detect_anomalies(forest, rows, 0.6), ContractError);
}

TEST_CASE("configuration and input contracts are enforced") {
    CHECK_THROWS_AS(fit_isolation_forest({}, {}), ContractError);
    IsolationForestConfig bad;
    bad.tree_count = 0;
    CHECK_THROWS_AS(fit_isolation_forest({{0.5, 0.5}}, bad), ContractError);
    bad = {};
    bad.subsample_size = 1;
    CHECK_THROWS_AS(fit_isolation_forest({{0.5, 0.5}}, bad), ContractError);
    CHECK_THROWS_AS(
        fit_isolation_forest({{0.5, 0.5}, {0.5}}, IsolationForestConfig{}),
        ContractError);
    const IsolationForest forest =
        fit_isolation_forest({{0.1, 0.2}, {0.3, 0.4}}, {});
    CHECK_THROWS_AS(score_row(forest, {0.1}), ContractError);
}

TEST_CASE("subsampling respects psi and the height limit") {
    Rng rng(11);
    std::vector<FeatureRow> rows;
    for (int i = 0; i < 1000; ++i) rows.push_back({rng.uniform(), rng.uniform()});
    IsolationForestConfig config;
    config.tree_count = 50;
    config.subsample_size = 64;
    config.seed = 2;
    const IsolationForest forest = fit_isolation_forest(rows, config);
    REQUIRE(forest.trees.size() == 50);
    for (const auto& tree : forest.trees) {
        CHECK(tree.nodes.front().size == 64);  // root holds the subsample
        // A binary tree of height <= log2(psi) = 6 has at most 2^7 - 1 nodes.
        CHECK(tree.nodes.size() <= 127);
    }
}
