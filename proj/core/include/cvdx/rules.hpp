// rules.hpp - clinical-rule losses on frame-level embeddings and
// mutual-information audits of the three rule inequalities
//
// The three training losses (temporal consistency, soft separability,
// counterfactual alignment) act on cosine similarities between the factual
// pair and the two counterfactual embeddings. The inequalities themselves are
// audited diagnostics estimated with a histogram MI estimator; they are never
// trained through.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "cvdx/autograd.hpp"

namespace cvdx::rules {

inline constexpr double kNormEpsilon = 1e-8;

// throws ValueError if either vector norm is below kNormEpsilon
ag::Var cosine_sim(const ag::Var& u, const ag::Var& v);
double cosine_sim_value(const std::vector<double>& u, const std::vector<double>& v);

struct RuleBatch {
    ag::Var f_t;      // factual stage-t embedding
    ag::Var f_t1;     // factual stage-t+1 embedding
    ag::Var cf_same;  // counterfactual embedding, same health
    ag::Var cf_opp;   // counterfactual embedding, opposite health

    // validates shared dimension and non-degenerate norms
    static RuleBatch make(ag::Var f_t, ag::Var f_t1, ag::Var cf_same, ag::Var cf_opp);
};

enum class SepSign { as_written, rule2_consistent };
SepSign sep_sign_from_name(const std::string& s);
const char* sep_sign_name(SepSign s);

struct RuleWeights {
    double lambda_temp = 1.0;
    double lambda_sep = 1.0;
    double lambda_align = 1.0;
    double margin = 0.2;
    SepSign sep_sign = SepSign::rule2_consistent;

    void validate() const;
};

// 1 - sim(f_t, f_t1), range [0,2]
ag::Var loss_temporal(const RuleBatch& batch);
// as_written:        sim(f_t1, f_t) - sim(f_t1, cf_opp)
// rule2_consistent:  the negation (default; see sep_sign)
ag::Var loss_separability(const RuleBatch& batch, const RuleWeights& weights);
// max(0, margin + sim(f_t1, cf_opp) - sim(f_t1, cf_same))
ag::Var loss_alignment(const RuleBatch& batch, const RuleWeights& weights);
// lambda-weighted sum of the three
ag::Var rule_loss_total(const RuleBatch& batch, const RuleWeights& weights);

// ---- mutual information ----------------------------------------------------

// plug-in histogram MI in nats over a bins x bins equal-width joint grid;
// requires n >= 100 paired samples and bins >= 2
double estimate_mi(const std::vector<double>& xs, const std::vector<double>& ys, int bins);

// top principal direction via power iteration (deterministic), then projection
std::vector<double> project_top_pc(const std::vector<std::vector<double>>& feats);

// d-dimensional features are projected onto their top principal direction
double estimate_mi_features(const std::vector<std::vector<double>>& xs,
                            const std::vector<std::vector<double>>& ys, int bins);

// ---- rule audit --------------------------------------------------------------

struct AuditSettings {
    int bins = 6;
    double dominance = 2.0;  // lhs > dominance * rhs => satisfied
    int key_stage_t = 1;
    int key_stage_t1 = 3;
};

struct AuditSamples {
    // per case: one embedding per stage keyframe
    std::vector<std::vector<std::vector<double>>> stage_embeddings;
    // per case: factual stage-t+1 embedding and the two counterfactuals
    std::vector<std::vector<double>> fact;
    std::vector<std::vector<double>> cf_same, cf_opp;
    std::vector<int> health;  // 0 benign, 1 malignant
};

struct RuleAuditReport {
    // named MI estimates in nats
    std::map<std::string, double> estimates;
    bool rule1_satisfied = false;
    bool rule2_satisfied = false;
    bool rule3_satisfied = false;
    bool rule2_evaluable = false;
    int bins = 0;
    double dominance = 0.0;
    int sample_count = 0;

    std::string to_json() const;
};

// purely diagnostic; never trained through
RuleAuditReport audit_rules(const AuditSamples& samples, const AuditSettings& settings);

}  // namespace cvdx::rules
