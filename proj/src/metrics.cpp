#include "xpomcp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xpomcp/errors.hpp"

namespace xpomcp {

namespace {

void check_scores(const std::vector<ScoredStep>& steps) {
    for (const ScoredStep& s : steps)
        if (!std::isfinite(s.score))
            throw ContractError("scores must be finite");
}

bool both_classes(const std::vector<ScoredStep>& steps) {
    bool pos = false, neg = false;
    for (const ScoredStep& s : steps) (s.truth ? pos : neg) = true;
    return pos && neg;
}

// Indices sorted by score descending; equal scores form one ROC/AP group.
std::vector<std::size_t> ranking(const std::vector<ScoredStep>& steps) {
    std::vector<std::size_t> order(steps.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return steps[a].score > steps[b].score;
                     });
    return order;
}

}  // namespace

std::vector<double> default_thresholds() {
    std::vector<double> out;
    out.reserve(100);
    for (int i = 0; i < 100; ++i) out.push_back(0.5 * i / 99.0);
    return out;
}

ThresholdPoint evaluate_threshold(const std::vector<ScoredStep>& steps,
                                  double threshold) {
    check_scores(steps);
    ThresholdPoint pt;
    pt.threshold = threshold;
    for (const ScoredStep& s : steps) {
        const bool predicted = s.score >= threshold;
        if (predicted && s.truth)
            ++pt.tp;
        else if (predicted && !s.truth)
            ++pt.fp;
        else if (!predicted && s.truth)
            ++pt.fn;
        else
            ++pt.tn;
    }
    const long n = pt.tp + pt.fp + pt.tn + pt.fn;
    pt.tpr = pt.tp + pt.fn > 0 ? static_cast<double>(pt.tp) / (pt.tp + pt.fn) : 0.0;
    pt.fpr = pt.fp + pt.tn > 0 ? static_cast<double>(pt.fp) / (pt.fp + pt.tn) : 0.0;
    pt.precision =
        pt.tp + pt.fp > 0 ? static_cast<double>(pt.tp) / (pt.tp + pt.fp) : 0.0;
    pt.recall = pt.tpr;
    pt.f1 = pt.precision + pt.recall > 0.0
                ? 2.0 * pt.precision * pt.recall / (pt.precision + pt.recall)
                : 0.0;
    pt.accuracy = n > 0 ? static_cast<double>(pt.tp + pt.tn) / n : 0.0;
    return pt;
}

SweepResult sweep(const std::vector<ScoredStep>& steps,
                  const std::vector<double>& thresholds) {
    if (steps.empty()) throw ContractError("sweep needs scored steps");
    check_scores(steps);
    SweepResult result;
    for (double t : thresholds) result.points.push_back(evaluate_threshold(steps, t));

    if (!both_classes(steps)) return result;  // AUC/AP undefined; rendered as dashes

    long total_pos = 0, total_neg = 0;
    for (const ScoredStep& s : steps) (s.truth ? total_pos : total_neg) += 1;

    // Walk the ranking in tie groups; trapezoidal AUC over the ROC curve and
    // AP as precision-weighted recall increments at each group boundary.
    const auto order = ranking(steps);
    double auc = 0.0, ap = 0.0;
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        long group_tp = 0, group_fp = 0;
        while (j < order.size() &&
               steps[order[j]].score == steps[order[i]].score) {
            (steps[order[j]].truth ? group_tp : group_fp) += 1;
            ++j;
        }
        const double tpr0 = static_cast<double>(tp) / total_pos;
        const double fpr0 = static_cast<double>(fp) / total_neg;
        const double recall0 = tpr0;
        tp += group_tp;
        fp += group_fp;
        const double tpr1 = static_cast<double>(tp) / total_pos;
        const double fpr1 = static_cast<double>(fp) / total_neg;
        auc += (fpr1 - fpr0) * 0.5 * (tpr0 + tpr1);
        const double precision = static_cast<double>(tp) / (tp + fp);
        ap += (tpr1 - recall0) * precision;
        i = j;
    }
    result.auc = auc;
    result.ap = ap;
    return result;
}

std::optional<double> rank_auc(const std::vector<ScoredStep>& steps) {
    if (!both_classes(steps)) return std::nullopt;
    const auto order = ranking(steps);
    // Average ranks within tie groups (ranks ascending in score).
    const std::size_t n = order.size();
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && steps[order[j]].score == steps[order[i]].score) ++j;
        // Descending positions i..j-1 correspond to ascending ranks
        // n-j+1..n-i; ties share the average.
        const double avg = (static_cast<double>(n - j + 1) + (n - i)) / 2.0;
        for (std::size_t k = i; k < j; ++k) rank[order[k]] = avg;
        i = j;
    }
    double pos_rank_sum = 0.0;
    long total_pos = 0, total_neg = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (steps[k].truth) {
            pos_rank_sum += rank[k];
            ++total_pos;
        } else {
            ++total_neg;
        }
    }
    return (pos_rank_sum - total_pos * (total_pos + 1) / 2.0) /
           (static_cast<double>(total_pos) * total_neg);
}

double select_threshold(const std::vector<std::vector<ScoredStep>>& train_traces,
                        const std::vector<double>& candidate_taus) {
    if (train_traces.empty()) throw ContractError("no training traces");
    if (candidate_taus.empty()) throw ContractError("no candidate thresholds");
    bool any_both = false;
    for (const auto& trace : train_traces)
        if (both_classes(trace)) any_both = true;
    if (!any_both)
        throw ValidationError(
            "threshold selection needs a training trace with both classes");

    double best_tau = candidate_taus.front();
    double best_f1 = -1.0;
    for (double tau : candidate_taus) {
        double sum = 0.0;
        for (const auto& trace : train_traces)
            sum += evaluate_threshold(trace, tau).f1;
        const double mean = sum / static_cast<double>(train_traces.size());
        if (mean > best_f1 + 1e-12 ||
            (std::abs(mean - best_f1) <= 1e-12 && tau < best_tau)) {
            best_f1 = mean;
            best_tau = tau;
        }
    }
    return best_tau;
}

}  // namespace xpomcp
