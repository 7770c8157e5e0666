#include "xpomcp/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xpomcp/errors.hpp"
#include "xpomcp/rng.hpp"

namespace xpomcp {

namespace {

// Average unsuccessful-search path length in a BST of n nodes (Liu et al.).
double average_path_length(int n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    const double harmonic = std::log(n - 1) + 0.57721566490153286;
    return 2.0 * harmonic - 2.0 * (n - 1) / static_cast<double>(n);
}

int build_node(IsolationForest::Tree& tree, const std::vector<FeatureRow>& rows,
               std::vector<int>& indices, int begin, int end, int depth,
               int height_limit, Rng& rng) {
    const int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_index].size = end - begin;
    if (end - begin <= 1 || depth >= height_limit) return node_index;

    const std::size_t dims = rows[indices[begin]].size();
    std::vector<int> usable;
    for (std::size_t d = 0; d < dims; ++d) {
        double lo = rows[indices[begin]][d], hi = lo;
        for (int i = begin + 1; i < end; ++i) {
            lo = std::min(lo, rows[indices[i]][d]);
            hi = std::max(hi, rows[indices[i]][d]);
        }
        if (hi > lo) usable.push_back(static_cast<int>(d));
    }
    if (usable.empty()) return node_index;  // all points identical

    const int feature = usable[rng.uniform_int(usable.size())];
    double lo = rows[indices[begin]][feature], hi = lo;
    for (int i = begin + 1; i < end; ++i) {
        lo = std::min(lo, rows[indices[i]][feature]);
        hi = std::max(hi, rows[indices[i]][feature]);
    }
    const double split = lo + rng.uniform() * (hi - lo);
    const auto mid_it =
        std::partition(indices.begin() + begin, indices.begin() + end,
                       [&](int i) { return rows[i][feature] < split; });
    int mid = static_cast<int>(mid_it - indices.begin());
    if (mid == begin || mid == end) return node_index;  // degenerate cut

    tree.nodes[node_index].feature = feature;
    tree.nodes[node_index].split = split;
    const int left = build_node(tree, rows, indices, begin, mid, depth + 1,
                                height_limit, rng);
    tree.nodes[node_index].left = left;
    const int right =
        build_node(tree, rows, indices, mid, end, depth + 1, height_limit, rng);
    tree.nodes[node_index].right = right;
    return node_index;
}

double path_length(const IsolationForest::Tree& tree, const FeatureRow& row) {
    int node = 0;
    double depth = 0.0;
    while (tree.nodes[node].feature >= 0) {
        node = row[tree.nodes[node].feature] < tree.nodes[node].split
                   ? tree.nodes[node].left
                   : tree.nodes[node].right;
        depth += 1.0;
    }
    return depth + average_path_length(tree.nodes[node].size);
}

}  // namespace

FeatureRow make_feature_row(const TraceStep& step, int action_count) {
    if (action_count < 1) throw ContractError("action_count must be >= 1");
    FeatureRow row;
    for (const auto& [name, value] : step.belief) row.push_back(value);
    row.push_back(action_count > 1
                      ? static_cast<double>(step.action) / (action_count - 1)
                      : 0.0);
    return row;
}

IsolationForest fit_isolation_forest(const std::vector<FeatureRow>& rows,
                                     const IsolationForestConfig& config) {
    if (rows.empty()) throw ContractError("isolation forest needs rows");
    if (config.tree_count < 1 || config.subsample_size < 2)
        throw ContractError("invalid isolation forest configuration");
    const std::size_t dims = rows.front().size();
    for (const FeatureRow& row : rows)
        if (row.size() != dims)
            throw ContractError("feature rows have inconsistent dimensions");

    IsolationForest forest;
    forest.config = config;
    forest.dimension = static_cast<int>(dims);
    const int psi =
        std::min<int>(config.subsample_size, static_cast<int>(rows.size()));
    const int height_limit =
        static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));

    Rng rng(config.seed);
    std::vector<int> all(rows.size());
    std::iota(all.begin(), all.end(), 0);
    for (int t = 0; t < config.tree_count; ++t) {
        // Partial Fisher-Yates: the first psi entries form the subsample.
        for (int i = 0; i < psi; ++i) {
            const int j = i + static_cast<int>(rng.uniform_int(all.size() - i));
            std::swap(all[i], all[j]);
        }
        std::vector<int> subsample(all.begin(), all.begin() + psi);
        IsolationForest::Tree tree;
        build_node(tree, rows, subsample, 0, psi, 0, height_limit, rng);
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

double score_row(const IsolationForest& forest, const FeatureRow& row) {
    if (static_cast<int>(row.size()) != forest.dimension)
        throw ContractError("feature row dimension mismatch");
    double total = 0.0;
    for (const IsolationForest::Tree& tree : forest.trees)
        total += path_length(tree, row);
    const double mean = total / static_cast<double>(forest.trees.size());
    const int psi = std::min<int>(forest.config.subsample_size,
                                  forest.trees.front().nodes.front().size);
    return std::pow(2.0, -mean / average_path_length(psi));
}

std::vector<double> score_rows(const IsolationForest& forest,
                               const std::vector<FeatureRow>& rows) {
    std::vector<double> scores;
    scores.reserve(rows.size());
    for (const FeatureRow& row : rows) scores.push_back(score_row(forest, row));
    return scores;
}

std::vector<bool> detect_anomalies(const IsolationForest& forest,
                                   const std::vector<FeatureRow>& rows,
                                   double contamination) {
    if (contamination <= 0.0 || contamination > 0.5)
        throw ContractError("contamination must be in (0, 0.5]");
    const std::vector<double> scores = score_rows(forest, rows);
    const std::size_t n = rows.size();
    const std::size_t flagged = std::min<std::size_t>(
        n, static_cast<std::size_t>(
               std::ceil(contamination * static_cast<double>(n))));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });
    std::vector<bool> out(n, false);
    for (std::size_t i = 0; i < flagged; ++i) out[order[i]] = true;
    return out;
}

}  // namespace xpomcp
