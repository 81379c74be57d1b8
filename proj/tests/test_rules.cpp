#include <doctest.h>

#include <cmath>

#include "cvdx/errors.hpp"
#include "cvdx/rules.hpp"
#include "test_util.hpp"

using namespace cvdx;
using namespace cvdx::rules;

namespace {
ag::Var vec(std::vector<double> v) {
    const int n = static_cast<int>(v.size());
    return ag::leaf(Tensor::from({n}, std::move(v)), true);
}

// batch whose pairwise cosine similarities are forced by construction on an
// orthogonal basis: f_t1 = e0; f_t = a*e0 + sqrt(1-a^2)*e1, etc.
RuleBatch batch_with_sims(double sim_t, double sim_opp, double sim_same) {
    auto mk = [&](double s, int axis) {
        std::vector<double> v(4, 0.0);
        v[0] = s;
        v[axis] = std::sqrt(std::max(0.0, 1.0 - s * s));
        return vec(std::move(v));
    };
    std::vector<double> e0(4, 0.0);
    e0[0] = 1.0;
    return RuleBatch::make(mk(sim_t, 1), vec(e0), mk(sim_same, 2), mk(sim_opp, 3));
}
}  // namespace

TEST_CASE("cosine similarity basics and degeneracy") {
    auto v = vec({1.0, 2.0, -0.5});
    CHECK(cosine_sim(v, v)->val[0] == doctest::Approx(1.0));
    auto neg = vec({-1.0, -2.0, 0.5});
    CHECK(cosine_sim(v, neg)->val[0] == doctest::Approx(-1.0));
    CHECK(cosine_sim(vec({1, 0, 0}), vec({0, 1, 0}))->val[0] == doctest::Approx(0.0));
    CHECK_THROWS_AS(cosine_sim(v, vec({0, 0, 0})), ValueError);
    CHECK_THROWS_AS(cosine_sim_value({1, 2}, {1, 2, 3}), ValueError);
    CHECK(cosine_sim_value({1, 1}, {1, 1}) == doctest::Approx(1.0));
}

TEST_CASE("temporal loss endpoints") {
    auto same = batch_with_sims(1.0, 0.0, 0.0);
    CHECK(loss_temporal(same)->val[0] == doctest::Approx(0.0).epsilon(1e-9));
    auto ortho = batch_with_sims(0.0, 0.0, 0.0);
    CHECK(loss_temporal(ortho)->val[0] == doctest::Approx(1.0));
    auto anti = batch_with_sims(-1.0, 0.0, 0.0);
    CHECK(loss_temporal(anti)->val[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("separability loss under both sign conventions") {
    RuleWeights w;
    auto b = batch_with_sims(0.9, 0.2, 0.5);
    w.sep_sign = SepSign::as_written;
    CHECK(loss_separability(b, w)->val[0] == doctest::Approx(0.7));
    w.sep_sign = SepSign::rule2_consistent;
    CHECK(loss_separability(b, w)->val[0] == doctest::Approx(-0.7));

    // all four vectors identical
    auto v = vec({0.3, 0.4, 0.5, 0.1});
    auto same = RuleBatch::make(v, v, v, v);
    w.sep_sign = SepSign::as_written;
    CHECK(loss_separability(same, w)->val[0] == doctest::Approx(0.0).epsilon(1e-9));
    w.sep_sign = SepSign::rule2_consistent;
    CHECK(loss_separability(same, w)->val[0] == doctest::Approx(0.0).epsilon(1e-9));

    // range bound
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        auto rnd = RuleBatch::make(vec({rng.normal(), rng.normal(), rng.normal(), rng.normal()}),
                                   vec({rng.normal(), rng.normal(), rng.normal(), rng.normal()}),
                                   vec({rng.normal(), rng.normal(), rng.normal(), rng.normal()}),
                                   vec({rng.normal(), rng.normal(), rng.normal(), rng.normal()}));
        double val = loss_separability(rnd, w)->val[0];
        CHECK(val >= -2.0);
        CHECK(val <= 2.0);
        CHECK(loss_temporal(rnd)->val[0] >= 0.0);
        CHECK(loss_temporal(rnd)->val[0] <= 2.0);
    }
}

TEST_CASE("alignment loss hinge cases") {
    RuleWeights w;
    w.margin = 0.2;
    CHECK(loss_alignment(batch_with_sims(0.0, 0.1, 0.9), w)->val[0] == doctest::Approx(0.0));
    CHECK(loss_alignment(batch_with_sims(0.0, 0.8, 0.5), w)->val[0] == doctest::Approx(0.5));

    auto v = vec({0.3, 0.4, 0.5, 0.1});
    auto b = RuleBatch::make(vec({1.0, 0, 0, 0}), vec({0, 1.0, 0, 0}), v, v);
    CHECK(loss_alignment(b, w)->val[0] == doctest::Approx(0.2));

    // continuity at the hinge point
    for (double delta : {-1e-7, 0.0, 1e-7}) {
        auto nb = batch_with_sims(0.0, 0.5 + delta, 0.7);  // margin + opp - same = delta
        double val = loss_alignment(nb, w)->val[0];
        CHECK(val == doctest::Approx(std::max(0.0, delta)).epsilon(1e-5));
    }
}

TEST_CASE("total rule loss is the weighted sum") {
    RuleWeights w;
    auto b = batch_with_sims(0.9, 0.2, 0.5);
    w.lambda_temp = w.lambda_sep = w.lambda_align = 0.0;
    CHECK(rule_loss_total(b, w)->val[0] == doctest::Approx(0.0));

    w = RuleWeights{};
    w.sep_sign = SepSign::as_written;
    double expect = loss_temporal(b)->val[0] + loss_separability(b, w)->val[0] +
                    loss_alignment(b, w)->val[0];
    CHECK(rule_loss_total(b, w)->val[0] == doctest::Approx(expect));

    w.lambda_temp = 1.0;
    w.lambda_sep = 0.0;
    w.lambda_align = 0.0;
    auto v = vec({0.2, 0.4, 0.1, 0.9});
    auto same = RuleBatch::make(v, v, v, v);
    CHECK(rule_loss_total(same, w)->val[0] == doctest::Approx(0.0).epsilon(1e-9));

    RuleWeights bad;
    bad.margin = 3.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("rule losses are invariant to positive rescaling") {
    Rng rng(4);
    RuleWeights w;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::vector<double>> raw(4);
        for (auto& v : raw)
            for (int i = 0; i < 6; ++i) v.push_back(rng.normal());
        auto make_scaled = [&](double c) {
            std::vector<ag::Var> vs;
            for (const auto& v : raw) {
                std::vector<double> s(v);
                for (auto& x : s) x *= c;
                vs.push_back(vec(std::move(s)));
            }
            return RuleBatch::make(vs[0], vs[1], vs[2], vs[3]);
        };
        double c = rng.uniform(0.2, 8.0);
        auto b1 = make_scaled(1.0);
        auto b2 = make_scaled(c);
        CHECK(std::fabs(rule_loss_total(b1, w)->val[0] - rule_loss_total(b2, w)->val[0]) < 1e-6);
    }
}

TEST_CASE("rule loss gradients match finite differences") {
    Rng rng(5);
    RuleWeights w;
    for (int trial = 0; trial < 5; ++trial) {
        auto f_t = vec({rng.normal(), rng.normal(), rng.normal(), rng.normal(), rng.normal()});
        auto f_t1 = vec({rng.normal(), rng.normal(), rng.normal(), rng.normal(), rng.normal()});
        auto cs = vec({rng.normal(), rng.normal(), rng.normal(), rng.normal(), rng.normal()});
        auto co = vec({rng.normal(), rng.normal(), rng.normal(), rng.normal(), rng.normal()});
        std::vector<ag::Var> leaves{f_t, f_t1, cs, co};
        auto rebatch = [&] { return RuleBatch::make(f_t, f_t1, cs, co); };
        CHECK(testutil::max_rel_grad_err(leaves, [&] { return loss_temporal(rebatch()); }) <
              1e-4);
        CHECK(testutil::max_rel_grad_err(leaves, [&] { return loss_separability(rebatch(), w); }) <
              1e-4);
        CHECK(testutil::max_rel_grad_err(leaves, [&] { return loss_alignment(rebatch(), w); }) <
              1e-4);
        CHECK(testutil::max_rel_grad_err(leaves, [&] { return rule_loss_total(rebatch(), w); }) <
              1e-4);
    }
}

TEST_CASE("MI estimator calibration") {
    Rng rng(6);
    const int n = 100000;
    std::vector<double> xs(n), ys(n);

    // identical 4-symbol uniform variables
    for (int i = 0; i < n; ++i) {
        xs[i] = rng.uniform_int(0, 3);
        ys[i] = xs[i];
    }
    double mi_same = estimate_mi(xs, ys, 4);
    CHECK(std::fabs(mi_same - std::log(4.0)) / std::log(4.0) < 0.05);

    // independent uniforms
    for (int i = 0; i < n; ++i) {
        xs[i] = rng.uniform();
        ys[i] = rng.uniform();
    }
    double mi_indep = estimate_mi(xs, ys, 8);
    CHECK(mi_indep < 0.05);

    // ordering: noisy copy sits strictly between
    for (int i = 0; i < n; ++i) {
        xs[i] = rng.uniform();
        ys[i] = xs[i] + 0.25 * rng.normal();
    }
    double mi_noisy = estimate_mi(xs, ys, 8);
    CHECK(mi_noisy > mi_indep);
    CHECK(mi_noisy < mi_same);

    // symmetry
    CHECK(std::fabs(estimate_mi(xs, ys, 8) - estimate_mi(ys, xs, 8)) < 1e-9);

    CHECK_THROWS_AS(estimate_mi({1, 2, 3}, {1, 2, 3}, 4), ValueError);
    std::vector<double> small(200, 0.5);
    CHECK_THROWS_AS(estimate_mi(small, small, 1), ValueError);
}

TEST_CASE("top principal direction projection is deterministic and informative") {
    Rng rng(7);
    std::vector<std::vector<double>> feats;
    for (int i = 0; i < 500; ++i) {
        double t = rng.normal();
        feats.push_back({3.0 * t + 0.05 * rng.normal(), -1.0 * t + 0.05 * rng.normal(),
                         0.02 * rng.normal()});
    }
    auto p1 = project_top_pc(feats);
    auto p2 = project_top_pc(feats);
    CHECK(p1 == p2);
    // projection correlates with the dominant factor up to sign
    double c = 0;
    for (int i = 0; i < 500; ++i) c += p1[i] * (feats[i][0] / 3.0);
    CHECK(std::fabs(c) / 500.0 > 0.5);
}

TEST_CASE("audit report is produced for an arbitrary encoder and flags degenerate input") {
    Rng rng(8);
    AuditSamples s;
    const int n = 150, d = 6, stages = 4;
    for (int i = 0; i < n; ++i) {
        std::vector<std::vector<double>> per_stage;
        for (int st = 0; st < stages; ++st) {
            std::vector<double> v(d);
            for (auto& x : v) x = rng.normal();
            per_stage.push_back(v);
        }
        s.stage_embeddings.push_back(per_stage);
        s.fact.push_back(per_stage[3]);
        std::vector<double> cs(d), co(d);
        for (auto& x : cs) x = rng.normal();
        for (auto& x : co) x = rng.normal();
        s.cf_same.push_back(cs);
        s.cf_opp.push_back(co);
        s.health.push_back(i % 2);
    }
    AuditSettings st;
    auto rep = audit_rules(s, st);
    CHECK(rep.sample_count == n);
    CHECK(rep.rule2_evaluable);
    CHECK(rep.estimates.count("rule1_mi_ft_health") == 1);
    CHECK(rep.estimates.count("rule3_mi_fact_cfsame") == 1);
    CHECK(rep.to_json().find("rule1_satisfied") != std::string::npos);

    // one-class dataset: rule 2 not evaluable
    for (auto& h : s.health) h = 1;
    auto rep1 = audit_rules(s, st);
    CHECK_FALSE(rep1.rule2_evaluable);
    CHECK(rep1.to_json().find("not_evaluable") != std::string::npos);

    AuditSamples tiny = s;
    tiny.health.resize(50);
    tiny.stage_embeddings.resize(50);
    tiny.fact.resize(50);
    tiny.cf_same.resize(50);
    tiny.cf_opp.resize(50);
    CHECK_THROWS_AS(audit_rules(tiny, st), ValueError);
}
