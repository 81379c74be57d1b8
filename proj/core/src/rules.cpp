#include "cvdx/rules.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "cvdx/errors.hpp"

namespace cvdx::rules {

namespace {
double norm_of(const Tensor& t) {
    double s = 0.0;
    for (int64_t i = 0; i < t.numel(); ++i) s += t[i] * t[i];
    return std::sqrt(s);
}
}  // namespace

ag::Var cosine_sim(const ag::Var& u, const ag::Var& v) {
    if (!u->val.same_shape(v->val)) throw ValueError("cosine_sim: dimension mismatch");
    if (norm_of(u->val) <= kNormEpsilon || norm_of(v->val) <= kNormEpsilon)
        throw ValueError("cosine_sim: degenerate (near-zero-norm) vector");
    auto nu = ag::sqrtv(ag::dot(u, u));
    auto nv = ag::sqrtv(ag::dot(v, v));
    return ag::divide(ag::dot(u, v), ag::mul(nu, nv));
}

double cosine_sim_value(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) throw ValueError("cosine_sim: dimension mismatch");
    double uu = 0, vv = 0, uv = 0;
    for (size_t i = 0; i < u.size(); ++i) {
        uu += u[i] * u[i];
        vv += v[i] * v[i];
        uv += u[i] * v[i];
    }
    if (std::sqrt(uu) <= kNormEpsilon || std::sqrt(vv) <= kNormEpsilon)
        throw ValueError("cosine_sim: degenerate (near-zero-norm) vector");
    return uv / (std::sqrt(uu) * std::sqrt(vv));
}

RuleBatch RuleBatch::make(ag::Var f_t, ag::Var f_t1, ag::Var cf_same, ag::Var cf_opp) {
    const auto& shape = f_t->val.shape();
    for (const auto* v : {&f_t1, &cf_same, &cf_opp})
        if ((*v)->val.shape() != shape) throw ValueError("RuleBatch: dimension mismatch");
    for (const auto* v : {&f_t, &f_t1, &cf_same, &cf_opp})
        if (norm_of((*v)->val) <= kNormEpsilon)
            throw ValueError("RuleBatch: degenerate (near-zero-norm) embedding");
    return RuleBatch{std::move(f_t), std::move(f_t1), std::move(cf_same), std::move(cf_opp)};
}

SepSign sep_sign_from_name(const std::string& s) {
    if (s == "as_written") return SepSign::as_written;
    if (s == "rule2_consistent") return SepSign::rule2_consistent;
    throw ConfigError("rules.sep_sign must be as_written|rule2_consistent");
}

const char* sep_sign_name(SepSign s) {
    return s == SepSign::as_written ? "as_written" : "rule2_consistent";
}

void RuleWeights::validate() const {
    for (double l : {lambda_temp, lambda_sep, lambda_align})
        if (!(l >= 0.0) || !std::isfinite(l))
            throw ConfigError("rules.lambda weights must be finite and non-negative");
    if (!(margin >= 0.0 && margin <= 2.0)) throw ConfigError("rules.margin must be in [0,2]");
}

ag::Var loss_temporal(const RuleBatch& batch) {
    return ag::add_scalar(ag::neg(cosine_sim(batch.f_t, batch.f_t1)), 1.0);
}

ag::Var loss_separability(const RuleBatch& batch, const RuleWeights& weights) {
    auto as_written =
        ag::sub(cosine_sim(batch.f_t1, batch.f_t), cosine_sim(batch.f_t1, batch.cf_opp));
    return weights.sep_sign == SepSign::as_written ? as_written : ag::neg(as_written);
}

ag::Var loss_alignment(const RuleBatch& batch, const RuleWeights& weights) {
    auto delta =
        ag::sub(cosine_sim(batch.f_t1, batch.cf_opp), cosine_sim(batch.f_t1, batch.cf_same));
    return ag::hinge(ag::add_scalar(delta, weights.margin));
}

ag::Var rule_loss_total(const RuleBatch& batch, const RuleWeights& weights) {
    weights.validate();
    auto total = ag::scale(loss_temporal(batch), weights.lambda_temp);
    total = ag::add(total, ag::scale(loss_separability(batch, weights), weights.lambda_sep));
    total = ag::add(total, ag::scale(loss_alignment(batch, weights), weights.lambda_align));
    return total;
}

// ---------------------------------------------------------------------------
// mutual information
// ---------------------------------------------------------------------------

double estimate_mi(const std::vector<double>& xs, const std::vector<double>& ys, int bins) {
    if (xs.size() != ys.size()) throw ValueError("estimate_mi: unpaired samples");
    if (xs.size() < 100) throw ValueError("estimate_mi: need at least 100 samples");
    if (bins < 2) throw ValueError("estimate_mi: bins must be >= 2");
    const size_t n = xs.size();

    auto bin_of = [bins](double v, double lo, double hi) {
        if (hi <= lo) return 0;
        int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        return std::clamp(b, 0, bins - 1);
    };
    auto minmax = [](const std::vector<double>& v) {
        auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return std::pair<double, double>(*lo, *hi);
    };
    auto [xlo, xhi] = minmax(xs);
    auto [ylo, yhi] = minmax(ys);

    std::vector<double> joint(static_cast<size_t>(bins) * bins, 0.0);
    std::vector<double> px(bins, 0.0), py(bins, 0.0);
    const double w = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        int bx = bin_of(xs[i], xlo, xhi);
        int by = bin_of(ys[i], ylo, yhi);
        joint[static_cast<size_t>(bx) * bins + by] += w;
        px[bx] += w;
        py[by] += w;
    }
    double mi = 0.0;
    for (int bx = 0; bx < bins; ++bx)
        for (int by = 0; by < bins; ++by) {
            double p = joint[static_cast<size_t>(bx) * bins + by];
            if (p > 0.0) mi += p * std::log(p / (px[bx] * py[by]));
        }
    return std::max(0.0, mi);
}

std::vector<double> project_top_pc(const std::vector<std::vector<double>>& feats) {
    if (feats.empty()) throw ValueError("project_top_pc: empty input");
    const size_t n = feats.size(), d = feats[0].size();
    std::vector<double> mean(d, 0.0);
    for (const auto& f : feats) {
        if (f.size() != d) throw ValueError("project_top_pc: ragged input");
        for (size_t j = 0; j < d; ++j) mean[j] += f[j];
    }
    for (auto& m : mean) m /= static_cast<double>(n);

    // covariance, then deterministic power iteration
    std::vector<double> cov(d * d, 0.0);
    for (const auto& f : feats)
        for (size_t i = 0; i < d; ++i) {
            double ci = f[i] - mean[i];
            for (size_t j = 0; j < d; ++j) cov[i * d + j] += ci * (f[j] - mean[j]);
        }
    double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (auto& c : cov) c /= denom;

    std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
    std::vector<double> nv(d);
    for (int iter = 0; iter < 100; ++iter) {
        for (size_t i = 0; i < d; ++i) {
            double s = 0.0;
            for (size_t j = 0; j < d; ++j) s += cov[i * d + j] * v[j];
            nv[i] = s;
        }
        double nrm = 0.0;
        for (double x : nv) nrm += x * x;
        nrm = std::sqrt(nrm);
        if (nrm < 1e-12) break;  // ~zero covariance; keep current direction
        for (size_t i = 0; i < d; ++i) v[i] = nv[i] / nrm;
    }
    // deterministic sign: first component with non-negligible magnitude is positive
    for (size_t i = 0; i < d; ++i)
        if (std::fabs(v[i]) > 1e-9) {
            if (v[i] < 0)
                for (auto& x : v) x = -x;
            break;
        }

    std::vector<double> proj(n);
    for (size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (size_t j = 0; j < d; ++j) s += (feats[r][j] - mean[j]) * v[j];
        proj[r] = s;
    }
    return proj;
}

double estimate_mi_features(const std::vector<std::vector<double>>& xs,
                            const std::vector<std::vector<double>>& ys, int bins) {
    if (xs.size() != ys.size()) throw ValueError("estimate_mi_features: unpaired samples");
    auto flatten = [](const std::vector<std::vector<double>>& f) {
        if (!f.empty() && f[0].size() == 1) {
            std::vector<double> out(f.size());
            for (size_t i = 0; i < f.size(); ++i) out[i] = f[i][0];
            return out;
        }
        return project_top_pc(f);
    };
    return estimate_mi(flatten(xs), flatten(ys), bins);
}

// ---------------------------------------------------------------------------
// rule audit
// ---------------------------------------------------------------------------

namespace {
std::vector<double> healths_as_double(const std::vector<int>& h) {
    std::vector<double> out(h.size());
    for (size_t i = 0; i < h.size(); ++i) out[i] = static_cast<double>(h[i]);
    return out;
}
}  // namespace

RuleAuditReport audit_rules(const AuditSamples& samples, const AuditSettings& settings) {
    const size_t n = samples.health.size();
    if (n < 100) throw ValueError("audit_rules: insufficient samples (need >= 100 cases)");
    if (samples.stage_embeddings.size() != n || samples.fact.size() != n ||
        samples.cf_same.size() != n || samples.cf_opp.size() != n)
        throw ValueError("audit_rules: sample arrays disagree in length");

    RuleAuditReport rep;
    rep.bins = settings.bins;
    rep.dominance = settings.dominance;
    rep.sample_count = static_cast<int>(n);

    const int stages = static_cast<int>(samples.stage_embeddings[0].size());
    auto hvals = healths_as_double(samples.health);
    auto mi_feat_label = [&](const std::vector<std::vector<double>>& feats,
                             const std::vector<double>& label) {
        return estimate_mi(project_top_pc(feats), label, settings.bins);
    };

    // ---- rule 1: health information vs stage-pair information ----
    std::vector<std::vector<double>> emb_t(n), emb_t1(n);
    for (size_t i = 0; i < n; ++i) {
        emb_t[i] = samples.stage_embeddings[i][settings.key_stage_t];
        emb_t1[i] = samples.stage_embeddings[i][settings.key_stage_t1];
    }
    double mi_ft_h = mi_feat_label(emb_t, hvals);
    double mi_ft1_h = mi_feat_label(emb_t1, hvals);

    std::vector<std::vector<double>> pair_feats;
    std::vector<double> pair_labels;
    for (size_t i = 0; i < n; ++i)
        for (int s = 0; s + 1 < stages; ++s) {
            std::vector<double> cat = samples.stage_embeddings[i][s];
            const auto& nxt = samples.stage_embeddings[i][s + 1];
            cat.insert(cat.end(), nxt.begin(), nxt.end());
            pair_feats.push_back(std::move(cat));
            pair_labels.push_back(static_cast<double>(s));
        }
    double mi_pair_stage =
        stages >= 3 ? estimate_mi(project_top_pc(pair_feats), pair_labels, settings.bins) : 0.0;

    rep.estimates["rule1_mi_ft_health"] = mi_ft_h;
    rep.estimates["rule1_mi_ft1_health"] = mi_ft1_h;
    rep.estimates["rule1_mi_pair_stage"] = mi_pair_stage;
    rep.rule1_satisfied = std::min(mi_ft_h, mi_ft1_h) > settings.dominance * mi_pair_stage;

    // ---- rule 2: counterfactual embeddings by target health ----
    size_t n_ben = 0, n_mal = 0;
    std::vector<std::vector<double>> cf_ben(n), cf_mal(n);
    for (size_t i = 0; i < n; ++i) {
        bool mal = samples.health[i] == 1;
        cf_ben[i] = mal ? samples.cf_opp[i] : samples.cf_same[i];
        cf_mal[i] = mal ? samples.cf_same[i] : samples.cf_opp[i];
        (mal ? n_mal : n_ben) += 1;
    }
    rep.rule2_evaluable = n_ben >= 2 && n_mal >= 2;
    if (rep.rule2_evaluable) {
        double mi_h_ben = mi_feat_label(cf_ben, hvals);
        double mi_h_mal = mi_feat_label(cf_mal, hvals);
        double mi_ben_mal = estimate_mi_features(cf_ben, cf_mal, settings.bins);
        rep.estimates["rule2_mi_health_cfben"] = mi_h_ben;
        rep.estimates["rule2_mi_health_cfmal"] = mi_h_mal;
        rep.estimates["rule2_mi_cfben_cfmal"] = mi_ben_mal;
        rep.rule2_satisfied = (mi_h_ben + mi_h_mal) > settings.dominance * mi_ben_mal;
    }

    // ---- rule 3: factual vs pathology-consistent / -inconsistent counterfactuals,
    //      estimated within each health class so the binary label cannot carry
    //      the dependence by itself ----
    double same_sum = 0.0, opp_sum = 0.0;
    int used = 0;
    for (int cls = 0; cls <= 1; ++cls) {
        std::vector<std::vector<double>> f, cs, co;
        for (size_t i = 0; i < n; ++i) {
            if (samples.health[i] != cls) continue;
            f.push_back(samples.fact[i]);
            cs.push_back(samples.cf_same[i]);
            co.push_back(samples.cf_opp[i]);
        }
        if (f.size() < 100) continue;
        double mi_same = estimate_mi_features(f, cs, settings.bins);
        double mi_opp = estimate_mi_features(f, co, settings.bins);
        rep.estimates[cls == 0 ? "rule3_mi_fact_cfsame_benign" : "rule3_mi_fact_cfsame_malignant"] =
            mi_same;
        rep.estimates[cls == 0 ? "rule3_mi_fact_cfopp_benign" : "rule3_mi_fact_cfopp_malignant"] =
            mi_opp;
        same_sum += mi_same;
        opp_sum += mi_opp;
        ++used;
    }
    if (used == 0) {
        // classes too small individually; fall back to the pooled estimate
        double mi_same = estimate_mi_features(samples.fact, samples.cf_same, settings.bins);
        double mi_opp = estimate_mi_features(samples.fact, samples.cf_opp, settings.bins);
        rep.estimates["rule3_mi_fact_cfsame_pooled"] = mi_same;
        rep.estimates["rule3_mi_fact_cfopp_pooled"] = mi_opp;
        same_sum = mi_same;
        opp_sum = mi_opp;
        used = 1;
    }
    rep.estimates["rule3_mi_fact_cfsame"] = same_sum / used;
    rep.estimates["rule3_mi_fact_cfopp"] = opp_sum / used;
    rep.rule3_satisfied = (same_sum / used) > settings.dominance * (opp_sum / used);
    return rep;
}

std::string RuleAuditReport::to_json() const {
    nlohmann::json j;
    j["estimates"] = estimates;
    j["flags"] = {{"rule1_satisfied", rule1_satisfied},
                  {"rule2_satisfied", rule2_evaluable ? nlohmann::json(rule2_satisfied)
                                                      : nlohmann::json("not_evaluable")},
                  {"rule3_satisfied", rule3_satisfied}};
    j["estimator"] = {{"kind", "histogram_plugin_top_pc"},
                      {"bins", bins},
                      {"dominance", dominance},
                      {"samples", sample_count}};
    return j.dump(2);
}

}  // namespace cvdx::rules
