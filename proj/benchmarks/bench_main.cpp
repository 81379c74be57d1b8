// bench_main.cpp - microbenchmarks for the hot numeric paths
#include <benchmark/benchmark.h>

#include "cvdx/diffusion.hpp"
#include "cvdx/learner.hpp"
#include "cvdx/metrics.hpp"
#include "cvdx/rules.hpp"
#include "cvdx/rng.hpp"

using namespace cvdx;

namespace {
Tensor random_image(int c, int n, Rng& rng) {
    Tensor t({c, n, n});
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform();
    return t;
}
}  // namespace

static void BM_unet_forward_32(benchmark::State& state) {
    diffusion::UNetConfig uc;
    uc.image_size = 32;
    uc.base_width = static_cast<int>(state.range(0));
    diffusion::UNet net(uc);
    Rng rng(1);
    Tensor noisy = random_image(3, 32, rng);
    Tensor ref = random_image(3, 32, rng);
    for (auto _ : state) {
        auto out = net.predict(noisy, ref, world::Health::benign, 10);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_unet_forward_32)->Arg(16)->Arg(32);

static void BM_encoder_clip_32(benchmark::State& state) {
    learner::EncoderConfig ec;
    ec.image_size = 32;
    ec.width = static_cast<int>(state.range(0));
    ec.feature_dim = 64;
    learner::ClipEncoder enc(ec);
    Rng rng(2);
    Tensor clip({3, 16, 32, 32});
    for (int64_t i = 0; i < clip.numel(); ++i) clip[i] = rng.uniform();
    for (auto _ : state) {
        auto rows = enc.encode_value(clip);
        benchmark::DoNotOptimize(rows);
    }
}
BENCHMARK(BM_encoder_clip_32)->Arg(4)->Arg(8);

static void BM_encoder_train_step(benchmark::State& state) {
    learner::EncoderConfig ec;
    ec.image_size = 32;
    ec.width = static_cast<int>(state.range(0));
    ec.feature_dim = 64;
    learner::ClipEncoder enc(ec);
    nn::AdamW opt(enc.params().vars(), 1e-3);
    Rng rng(3);
    Tensor clip({3, 16, 32, 32});
    for (int64_t i = 0; i < clip.numel(); ++i) clip[i] = rng.uniform();
    for (auto _ : state) {
        opt.zero_grad();
        auto rows = enc.encode(ag::constant(clip));
        auto loss = ag::mean_all(ag::mul(rows, rows));
        ag::backward(loss);
        opt.step();
        benchmark::DoNotOptimize(loss->val[0]);
    }
}
BENCHMARK(BM_encoder_train_step)->Arg(4)->Arg(8);

static void BM_generate_case_32(benchmark::State& state) {
    world::WorldConfig cfg;
    cfg.image_size = 32;
    uint64_t seed = 0;
    for (auto _ : state) {
        auto rec = world::generate_case(cfg, seed++);
        benchmark::DoNotOptimize(rec.frames.data());
    }
}
BENCHMARK(BM_generate_case_32);

static void BM_mi_estimate(benchmark::State& state) {
    Rng rng(4);
    const int n = 100000;
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = rng.uniform();
        ys[i] = xs[i] + 0.2 * rng.normal();
    }
    for (auto _ : state) {
        double mi = rules::estimate_mi(xs, ys, 16);
        benchmark::DoNotOptimize(mi);
    }
}
BENCHMARK(BM_mi_estimate);

static void BM_roc_auc(benchmark::State& state) {
    Rng rng(5);
    const int n = 50000;
    std::vector<double> scores(n);
    std::vector<uint8_t> labels(n);
    for (int i = 0; i < n; ++i) {
        scores[i] = rng.uniform();
        labels[i] = rng.uniform() < 0.3;
    }
    for (auto _ : state) {
        double auc = metrics::roc_auc(scores, labels);
        benchmark::DoNotOptimize(auc);
    }
}
BENCHMARK(BM_roc_auc);

BENCHMARK_MAIN();
