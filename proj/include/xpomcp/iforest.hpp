#pragma once

#include <cstdint>
#include <vector>

#include "xpomcp/trace.hpp"

namespace xpomcp {

// Feature vector for one trace step: belief probabilities followed by the
// action scaled to [0,1].
using FeatureRow = std::vector<double>;

FeatureRow make_feature_row(const TraceStep& step, int action_count);

struct IsolationForestConfig {
    int tree_count = 100;
    int subsample_size = 256;  // psi
    std::uint64_t seed = 0;
};

struct IsolationForest {
    struct Node {
        int feature = -1;      // -1 for leaves
        double split = 0.0;
        int left = -1, right = -1;
        int size = 0;          // leaf: number of training rows that ended here
    };
    struct Tree {
        std::vector<Node> nodes;  // node 0 is the root
    };
    IsolationForestConfig config;
    std::vector<Tree> trees;
    int dimension = 0;
};

// Standard Liu et al. construction: per tree, a subsample of psi rows split
// by uniform random axis-aligned cuts down to height ceil(log2 psi).
IsolationForest fit_isolation_forest(const std::vector<FeatureRow>& rows,
                                     const IsolationForestConfig& config);

// Anomaly score s(x) = 2^(-E[path length]/c(psi)), in (0,1).
double score_row(const IsolationForest& forest, const FeatureRow& row);
std::vector<double> score_rows(const IsolationForest& forest,
                               const std::vector<FeatureRow>& rows);

// Flags the ceil(contamination * n) highest-scoring rows.
std::vector<bool> detect_anomalies(const IsolationForest& forest,
                                   const std::vector<FeatureRow>& rows,
                                   double contamination);

}  // namespace xpomcp
