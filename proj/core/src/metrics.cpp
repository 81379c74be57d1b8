#include "cvdx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cvdx/errors.hpp"
#include "cvdx/rng.hpp"

namespace cvdx::metrics {

PRFResult multilabel_prf(const std::vector<std::vector<double>>& pred,
                         const std::vector<std::vector<uint8_t>>& gt, double threshold) {
    if (pred.empty() || pred.size() != gt.size())
        throw ValueError("multilabel_prf: empty or mismatched case lists");
    int64_t tp = 0, fp = 0, fn = 0;
    int exact = 0;
    for (size_t c = 0; c < pred.size(); ++c) {
        if (pred[c].size() != gt[c].size())
            throw ValueError("multilabel_prf: position count mismatch in case " +
                             std::to_string(c));
        bool match = true;
        for (size_t p = 0; p < pred[c].size(); ++p) {
            bool ph = pred[c][p] >= threshold;
            bool gh = gt[c][p] != 0;
            tp += ph && gh;
            fp += ph && !gh;
            fn += !ph && gh;
            match = match && ph == gh;
        }
        exact += match;
    }
    PRFResult r;
    r.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 1.0;
    r.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    r.accuracy = static_cast<double>(exact) / static_cast<double>(pred.size());
    return r;
}

namespace {
int circular_distance(int a, int b, int P) {
    int d = std::abs(a - b) % P;
    return std::min(d, P - d);
}
}  // namespace

double recall_at_1_case(const std::vector<int>& pred_positives,
                        const std::vector<int>& gt_positives, int num_positions) {
    if (num_positions < 3) throw ValueError("recall_at_1: num_positions must be >= 3");
    if (gt_positives.empty()) throw ValueError("recall_at_1: empty ground truth for case");
    int recalled = 0;
    for (int g : gt_positives) {
        for (int p : pred_positives)
            if (circular_distance(p, g, num_positions) <= 1) {
                ++recalled;
                break;
            }
    }
    return static_cast<double>(recalled) / static_cast<double>(gt_positives.size());
}

double recall_at_1(const std::vector<std::vector<int>>& pred_positives,
                   const std::vector<std::vector<int>>& gt_positives, int num_positions) {
    if (pred_positives.size() != gt_positives.size())
        throw ValueError("recall_at_1: case count mismatch");
    double sum = 0.0;
    int counted = 0;
    for (size_t c = 0; c < gt_positives.size(); ++c) {
        if (gt_positives[c].empty()) continue;  // no sites to recall
        sum += recall_at_1_case(pred_positives[c], gt_positives[c], num_positions);
        ++counted;
    }
    if (counted == 0) throw ValueError("recall_at_1: no case has ground-truth positives");
    return sum / counted;
}

double average_precision(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
    if (scores.size() != labels.size()) throw ValueError("average_precision: length mismatch");
    int positives = std::count(labels.begin(), labels.end(), uint8_t{1});
    if (positives == 0) throw ValueError("average_precision: no positive labels");
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    double ap = 0.0;
    int tp = 0;
    for (size_t rank = 0; rank < order.size(); ++rank) {
        if (labels[order[rank]]) {
            ++tp;
            ap += static_cast<double>(tp) / static_cast<double>(rank + 1);
        }
    }
    return ap / positives;
}

double roc_auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
    if (scores.size() != labels.size()) throw ValueError("roc_auc: length mismatch");
    int64_t pos = std::count(labels.begin(), labels.end(), uint8_t{1});
    int64_t neg = static_cast<int64_t>(labels.size()) - pos;
    if (pos == 0 || neg == 0) throw ValueError("roc_auc: need one positive and one negative");
    // rank-sum with average ranks over ties
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (size_t k = i; k <= j; ++k)
            if (labels[order[k]]) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    return (rank_sum_pos - static_cast<double>(pos) * (pos + 1) / 2.0) /
           (static_cast<double>(pos) * static_cast<double>(neg));
}

std::map<std::string, FoldStats> crossval_aggregate(
    const std::vector<std::map<std::string, double>>& fold_results) {
    if (fold_results.size() < 2) throw ValueError("crossval_aggregate: need >= 2 folds");
    const auto& keys = fold_results.front();
    for (size_t f = 1; f < fold_results.size(); ++f) {
        for (const auto& [k, v] : keys)
            if (!fold_results[f].count(k))
                throw ValueError("crossval_aggregate: fold " + std::to_string(f) +
                                 " missing metric '" + k + "'");
        for (const auto& [k, v] : fold_results[f])
            if (!keys.count(k))
                throw ValueError("crossval_aggregate: fold " + std::to_string(f) +
                                 " has extra metric '" + k + "'");
    }
    std::map<std::string, FoldStats> out;
    const double n = static_cast<double>(fold_results.size());
    for (const auto& [k, v0] : keys) {
        double mean = 0.0;
        for (const auto& f : fold_results) mean += f.at(k);
        mean /= n;
        double var = 0.0;
        for (const auto& f : fold_results) {
            double d = f.at(k) - mean;
            var += d * d;
        }
        out[k] = FoldStats{mean, std::sqrt(var / (n - 1.0))};
    }
    return out;
}

std::vector<int> assign_folds(const std::vector<std::string>& case_ids,
                              const std::vector<world::Health>& healths, int folds) {
    if (folds < 2) throw ValueError("assign_folds: folds must be >= 2");
    if (case_ids.size() != healths.size()) throw ValueError("assign_folds: length mismatch");
    std::vector<int> out(case_ids.size(), 0);
    for (int cls = 0; cls <= 1; ++cls) {
        std::vector<std::pair<uint64_t, size_t>> keyed;
        for (size_t i = 0; i < case_ids.size(); ++i) {
            bool mal = healths[i] == world::Health::malignant;
            if ((cls == 1) != mal) continue;
            keyed.emplace_back(fnv1a64(case_ids[i].data(), case_ids[i].size()), i);
        }
        std::sort(keyed.begin(), keyed.end());
        for (size_t r = 0; r < keyed.size(); ++r)
            out[keyed[r].second] = static_cast<int>(r % folds);
    }
    return out;
}

std::vector<int> positives_at_threshold(const std::vector<double>& pred, double threshold) {
    std::vector<int> out;
    for (size_t i = 0; i < pred.size(); ++i)
        if (pred[i] >= threshold) out.push_back(static_cast<int>(i));
    return out;
}

}  // namespace cvdx::metrics
