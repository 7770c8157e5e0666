#pragma once

#include <optional>
#include <vector>

namespace xpomcp {

// One evaluated step: an anomaly score (XPOMCP: h for violating steps, 0 for
// satisfied ones; IF: forest score) and the ground-truth error label.
struct ScoredStep {
    double score = 0.0;
    bool truth = false;
};

struct ThresholdPoint {
    double threshold = 0.0;
    long tp = 0, fp = 0, tn = 0, fn = 0;
    double tpr = 0.0, fpr = 0.0;
    double precision = 0.0, recall = 0.0;
    double f1 = 0.0, accuracy = 0.0;
};

// AUC/AP come from the full score ranking; the threshold table is a
// uniform 100-threshold sweep over [0, 0.5].
struct SweepResult {
    std::vector<ThresholdPoint> points;
    std::optional<double> auc;  // nullopt when only one class is present
    std::optional<double> ap;
};

std::vector<double> default_thresholds();  // 100 uniform values in [0, 0.5]

ThresholdPoint evaluate_threshold(const std::vector<ScoredStep>& steps,
                                  double threshold);

SweepResult sweep(const std::vector<ScoredStep>& steps,
                  const std::vector<double>& thresholds = default_thresholds());

// Rank-statistic (Mann-Whitney) AUC; independent cross-check of sweep().
std::optional<double> rank_auc(const std::vector<ScoredStep>& steps);

// tau* maximizing mean F1 over the training traces; ties -> smaller tau.
// Throws ValidationError when no training trace has both classes.
double select_threshold(const std::vector<std::vector<ScoredStep>>& train_traces,
                        const std::vector<double>& candidate_taus);

}  // namespace xpomcp
