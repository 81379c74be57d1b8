#include <doctest.h>

#include "cvdx/errors.hpp"
#include "cvdx/synthworld.hpp"
#include "test_util.hpp"

using namespace cvdx;
using namespace cvdx::world;

namespace {
WorldConfig small_world() {
    WorldConfig c;
    c.image_size = 32;
    c.frames_per_stage = 2;
    c.seed = 42;
    return c;
}
}  // namespace

TEST_CASE("generate_case is deterministic and bit-identical") {
    auto cfg = small_world();
    auto a = generate_case(cfg, 1234);
    auto b = generate_case(cfg, 1234);
    CHECK(a == b);
    auto c = generate_case(cfg, 1235);
    CHECK_FALSE(a == c);
}

TEST_CASE("forced lesion positions and health determine labels") {
    auto cfg = small_world();
    cfg.force_positions = std::vector<int>{3};
    cfg.force_health = Health::malignant;
    auto rec = generate_case(cfg, 77);
    REQUIRE(rec.labels.size() == 12);
    for (int p = 0; p < 12; ++p) CHECK(rec.labels[p] == (p == 3 ? 1 : 0));

    cfg.force_health = Health::benign;
    auto ben = generate_case(cfg, 77);
    for (int p = 0; p < 12; ++p) CHECK(ben.labels[p] == 0);
}

TEST_CASE("render_frame: stage-0 zero-nuisance render equals base texture") {
    auto cfg = small_world();
    auto state = tissue_from_seed(cfg, 99, Health::malignant);
    NuisanceSample none;
    auto img = render_frame(state, 0, none, cfg);
    CHECK(img.same_shape(state.base_texture));
    double diff = 0;
    for (int64_t i = 0; i < img.numel(); ++i)
        diff = std::max(diff, std::fabs(img[i] - state.base_texture[i]));
    CHECK(diff == doctest::Approx(0.0));

    auto img2 = render_frame(state, 0, none, cfg);
    for (int64_t i = 0; i < img.numel(); ++i) CHECK(img[i] == img2[i]);

    CHECK_THROWS_AS(render_frame(state, cfg.num_stages, none, cfg), ValueError);
}

TEST_CASE("malignant lesion region brightens more than the rest by the final stage") {
    auto cfg = small_world();
    cfg.force_health = Health::malignant;
    auto rec = generate_case(cfg, 4242);
    auto state = tissue_from_seed(cfg, 4242, Health::malignant);
    NuisanceSample none;
    auto first = render_frame(state, 0, none, cfg);
    auto last = render_frame(state, cfg.num_stages - 1, none, cfg);

    std::vector<int> lesions;
    for (int p = 0; p < cfg.num_positions; ++p)
        if (rec.labels[p]) lesions.push_back(p);
    REQUIRE_FALSE(lesions.empty());
    auto mask = sector_mask(cfg, lesions);

    double in_sum = 0, out_sum = 0;
    int64_t in_n = 0, out_n = 0;
    for (int y = 0; y < cfg.image_size; ++y)
        for (int x = 0; x < cfg.image_size; ++x) {
            double d = 0;
            for (int c = 0; c < cfg.channels; ++c)
                d += std::fabs(last.at3(c, y, x) - first.at3(c, y, x));
            if (mask.at2(y, x) > 0.5) {
                in_sum += d;
                ++in_n;
            } else if (first.at3(0, y, x) > 0.0) {  // inside disk
                out_sum += d;
                ++out_n;
            }
        }
    CHECK(in_sum / in_n > out_sum / out_n);
}

TEST_CASE("oracle counterfactual identity and label flips") {
    auto cfg = small_world();
    cfg.force_health = Health::benign;
    auto ben = generate_case(cfg, 555);
    auto same = oracle_counterfactual(ben, Health::benign, cfg);
    CHECK(ben == same);

    auto mal = oracle_counterfactual(ben, Health::malignant, cfg);
    int positives = 0;
    for (auto v : mal.labels) positives += v;
    CHECK(positives > 0);
    CHECK(mal.health == Health::malignant);
    // twice gives the identical record
    auto mal2 = oracle_counterfactual(ben, Health::malignant, cfg);
    CHECK(mal == mal2);

    VideoRecord broken = ben;
    broken.nuisance_trace.clear();
    CHECK_THROWS_AS(oracle_counterfactual(broken, Health::malignant, cfg), ValueError);
}

TEST_CASE("counterfactual locality: difference mass concentrates in lesion sectors") {
    auto cfg = small_world();
    cfg.force_health = Health::malignant;
    for (uint64_t seed : {10u, 11u, 12u, 13u, 14u}) {
        auto rec = generate_case(cfg, seed);
        auto ben = oracle_counterfactual(rec, Health::benign, cfg);
        std::vector<int> lesions;
        for (int p = 0; p < cfg.num_positions; ++p)
            if (rec.labels[p]) lesions.push_back(p);
        REQUIRE_FALSE(lesions.empty());

        const int t = rec.frames_total() - 1;  // final stage
        auto mask = sector_mask(cfg, lesions, rec.nuisance_trace[t].dx, rec.nuisance_trace[t].dy);
        auto fa = rec.frame(t);
        auto fb = ben.frame(t);
        double inside = 0, total = 0;
        for (int y = 0; y < cfg.image_size; ++y)
            for (int x = 0; x < cfg.image_size; ++x)
                for (int c = 0; c < cfg.channels; ++c) {
                    double d = std::fabs(fa.at3(c, y, x) - fb.at3(c, y, x));
                    total += d;
                    if (mask.at2(y, x) > 0.5) inside += d;
                }
        REQUIRE(total > 0);
        CHECK(inside / total >= 0.90);
    }
}

TEST_CASE("label consistency: labels iff severity above threshold") {
    auto cfg = small_world();
    for (int i = 0; i < 30; ++i) {
        uint64_t seed = case_seed(cfg, i);
        auto rec = generate_case(cfg, seed);
        auto state = tissue_from_seed(cfg, seed, rec.health);
        for (int p = 0; p < cfg.num_positions; ++p)
            CHECK(rec.labels[p] == (state.severity[p] >= kLesionThreshold ? 1 : 0));
    }
}

TEST_CASE("causal separation: lesion-mask probe separates, nuisance probe does not") {
    auto cfg = small_world();
    const int n = 200;
    std::vector<std::vector<double>> mask_feats, nuis_feats;
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) {
        WorldConfig c = cfg;
        c.force_health = (i % 2 == 0) ? Health::benign : Health::malignant;
        auto rec = generate_case(c, case_seed(cfg, i));
        auto state = tissue_from_seed(cfg, rec.seed, rec.health);
        std::vector<int> candidates = state.candidates;
        const int t = rec.frames_total() - 1;
        auto mask = sector_mask(cfg, candidates, rec.nuisance_trace[t].dx,
                                rec.nuisance_trace[t].dy);
        auto frame = rec.frame(t);
        // fixed-dimension view of the frame restricted to the lesion mask:
        // histogram of pixel/median ratios (global illumination cancels)
        const int bins = 20;
        std::vector<double> px;
        for (int y = 0; y < cfg.image_size; ++y)
            for (int x = 0; x < cfg.image_size; ++x)
                if (mask.at2(y, x) > 0.5) {
                    double v = 0;
                    for (int ch = 0; ch < cfg.channels; ++ch) v += frame.at3(ch, y, x);
                    px.push_back(v / cfg.channels);
                }
        std::vector<double> sorted = px;
        std::sort(sorted.begin(), sorted.end());
        double median = sorted.empty() ? 1.0 : sorted[sorted.size() / 2];
        std::vector<double> mf(bins, 0.0);
        for (double v : px) {
            int b = std::min(bins - 1, static_cast<int>(v / std::max(1e-6, median) / 2.5 * bins));
            mf[b] += 1.0;
        }
        for (auto& v : mf) v /= std::max<size_t>(1, px.size());
        mask_feats.push_back(std::move(mf));

        std::vector<double> nf;
        for (const auto& nu : rec.nuisance_trace) {
            nf.push_back(nu.brightness);
            nf.push_back(nu.dx);
            nf.push_back(nu.dy);
            for (double g : nu.channel_gain) nf.push_back(g);
        }
        nuis_feats.push_back(std::move(nf));
        labels.push_back(rec.health == Health::malignant ? 1 : 0);
    }
    double acc_mask = testutil::probe_accuracy(mask_feats, labels);
    double acc_nuis = testutil::probe_accuracy(nuis_feats, labels);
    CHECK(acc_mask > 0.95);
    CHECK(acc_nuis >= 0.4);
    CHECK(acc_nuis <= 0.6);
}

TEST_CASE("config validation names the offending field") {
    WorldConfig c;
    c.image_size = 4;
    CHECK_THROWS_WITH_AS(c.validate(), "world.image_size must be >= 8", ConfigError);
    c = WorldConfig{};
    c.response.malignant_mean = c.response.benign_mean;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = WorldConfig{};
    c.lesion_count_max = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("anomaly world: determinism, flags, and event visibility") {
    AnomalyConfig ac;
    ac.image_size = 16;
    ac.num_snippets = 8;
    ac.snippet_len = 8;
    ac.event_len_min = 10;
    ac.event_len_max = 30;
    ac.seed = 7;

    auto a = generate_anomaly_case(ac, 100, true);
    auto b = generate_anomaly_case(ac, 100, true);
    CHECK(a == b);
    CHECK(a.labels[0] == 1);
    CHECK(a.frames_total() == ac.frames_total());

    auto flags = anomaly_frame_flags(ac, 100, true);
    int flagged = 0;
    for (auto f : flags) flagged += f;
    CHECK(flagged >= ac.event_len_min);

    auto normal = generate_anomaly_case(ac, 101, false);
    CHECK(normal.labels[0] == 0);
    auto nflags = anomaly_frame_flags(ac, 101, false);
    for (auto f : nflags) CHECK(f == 0);

    // flagged frames are brighter than unflagged ones on average
    auto mean_of = [&](const VideoRecord& r, int t) {
        auto fr = r.frame(t);
        return fr.mean();
    };
    double on = 0, off = 0;
    int non = 0, noff = 0;
    for (int t = 0; t < a.frames_total(); ++t) {
        if (flags[t]) {
            on += mean_of(a, t);
            ++non;
        } else {
            off += mean_of(a, t);
            ++noff;
        }
    }
    REQUIRE(non > 0);
    REQUIRE(noff > 0);
    CHECK(on / non > off / noff);
}

TEST_CASE("pair cases are mirrored with a lesion on at most one side") {
    WorldConfig cfg;
    cfg.image_size = 16;
    cfg.seed = 3;
    int lesions = 0;
    for (int i = 0; i < 20; ++i) {
        auto pc = generate_pair_case(cfg, derive_seed(3, i));
        bool both = pc.left_malignant && pc.right_malignant;
        CHECK_FALSE(both);
        lesions += pc.left_malignant || pc.right_malignant;
        CHECK(pc.left.shape() == pc.right.shape());
    }
    CHECK(lesions > 0);
    CHECK(lesions < 20);
}
