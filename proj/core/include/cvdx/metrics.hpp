// metrics.hpp - evaluation metrics: micro-averaged multi-label
// recall/precision, subset accuracy, circular tolerant recall (Recall@1),
// average precision, ROC-AUC, and cross-validation aggregation
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cvdx/synthworld.hpp"

namespace cvdx::metrics {

struct PRFResult {
    double recall = 0.0;
    double precision = 0.0;
    double accuracy = 0.0;  // exact-match subset accuracy
};

// positives are predictions >= threshold; recall/precision micro-averaged over
// all (case, position) pairs; empty prediction sets give precision 0
PRFResult multilabel_prf(const std::vector<std::vector<double>>& pred,
                         const std::vector<std::vector<uint8_t>>& gt, double threshold = 0.5);

// a ground-truth position counts as recalled iff some predicted positive lies
// within circular distance 1; cases with empty ground truth are excluded
double recall_at_1_case(const std::vector<int>& pred_positives,
                        const std::vector<int>& gt_positives, int num_positions);
double recall_at_1(const std::vector<std::vector<int>>& pred_positives,
                   const std::vector<std::vector<int>>& gt_positives, int num_positions);

// ranking by descending score, ties kept in original order
double average_precision(const std::vector<double>& scores, const std::vector<uint8_t>& labels);

// Mann-Whitney statistic: P(score_pos > score_neg) + 0.5 P(equal)
double roc_auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels);

struct FoldStats {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation
};

// per-metric mean and sample std across folds; throws on inconsistent keys
std::map<std::string, FoldStats> crossval_aggregate(
    const std::vector<std::map<std::string, double>>& fold_results);

// deterministic fold assignment by case_id hash, stratified by health
std::vector<int> assign_folds(const std::vector<std::string>& case_ids,
                              const std::vector<world::Health>& healths, int folds);

// threshold positives helper
std::vector<int> positives_at_threshold(const std::vector<double>& pred, double threshold);

}  // namespace cvdx::metrics
