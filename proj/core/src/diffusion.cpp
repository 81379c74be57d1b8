#include "cvdx/diffusion.hpp"

#include <cmath>

#include "cvdx/errors.hpp"

namespace cvdx::diffusion {

NoiseSchedule build_schedule(int K, double beta_start, double beta_end) {
    if (K < 1) throw ConfigError("schedule.K must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw ConfigError("schedule.beta bounds must satisfy 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.K = K;
    s.beta_.resize(K);
    s.alpha_.resize(K);
    s.alpha_bar_.resize(K + 1);
    s.alpha_bar_[0] = 1.0;
    for (int k = 1; k <= K; ++k) {
        double b = K == 1 ? beta_start
                          : beta_start + (beta_end - beta_start) * (k - 1) / (K - 1);
        s.beta_[k - 1] = b;
        s.alpha_[k - 1] = 1.0 - b;
        s.alpha_bar_[k] = s.alpha_bar_[k - 1] * s.alpha_[k - 1];
    }
    return s;
}

Tensor forward_diffuse(const Tensor& x, int k, const NoiseSchedule& sched, const Tensor& noise) {
    if (!x.same_shape(noise)) throw ValueError("forward_diffuse: x/noise shape mismatch");
    if (k < 0 || k > sched.K) throw ValueError("forward_diffuse: step out of range");
    const double ab = sched.alpha_bar(k);
    const double cs = std::sqrt(ab), cn = std::sqrt(1.0 - ab);
    Tensor out = x;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = cs * x[i] + cn * noise[i];
    return out;
}

Tensor denoise_step(const Tensor& eps_k, const Tensor& eps_hat, int k,
                    const NoiseSchedule& sched) {
    if (k < 1 || k > sched.K) throw ValueError("denoise_step: step must be in [1,K]");
    if (!eps_k.same_shape(eps_hat)) throw ValueError("denoise_step: shape mismatch");
    const double inv_sa = 1.0 / std::sqrt(sched.alpha(k));
    const double coef = sched.beta(k) / std::sqrt(1.0 - sched.alpha_bar(k));
    Tensor out = eps_k;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = inv_sa * (eps_k[i] - coef * eps_hat[i]);
    return out;
}

// ---------------------------------------------------------------------------
// UNet
// ---------------------------------------------------------------------------

namespace {
int pick_groups(int channels) {
    for (int g : {8, 4, 2})
        if (channels % g == 0) return g;
    return 1;
}
}  // namespace

UNet::UNet(const UNetConfig& cfg) : cfg_(cfg) {
    if (cfg.image_size % 4 != 0) throw ConfigError("diffusion.image_size must be divisible by 4");
    Rng rng(cfg.init_seed);
    const int w = cfg.base_width, e = cfg.emb_dim, c = cfg.channels;

    auto block = [&](const std::string& name, int cin, int cout) {
        Block b;
        b.conv1 = nn::Conv2d(params_, name + ".conv1", cin, cout, 3, 1, 1, rng);
        b.gn1 = nn::GroupNorm(params_, name + ".gn1", cout, pick_groups(cout));
        b.emb = nn::Linear(params_, name + ".emb", e, cout, rng);
        b.conv2 = nn::Conv2d(params_, name + ".conv2", cout, cout, 3, 1, 1, rng);
        b.gn2 = nn::GroupNorm(params_, name + ".gn2", cout, pick_groups(cout));
        return b;
    };

    stem_ = nn::Conv2d(params_, "stem", 2 * c, w, 3, 1, 1, rng);
    down0_ = block("down0", w, w);
    downc0_ = nn::Conv2d(params_, "downc0", w, 2 * w, 3, 2, 1, rng);
    down1_ = block("down1", 2 * w, 2 * w);
    downc1_ = nn::Conv2d(params_, "downc1", 2 * w, 4 * w, 3, 2, 1, rng);
    mid_ = block("mid", 4 * w, 4 * w);
    upc1_ = nn::Conv2d(params_, "upc1", 4 * w, 2 * w, 3, 1, 1, rng);
    up1_ = block("up1", 4 * w, 2 * w);
    upc0_ = nn::Conv2d(params_, "upc0", 2 * w, w, 3, 1, 1, rng);
    up0_ = block("up0", 2 * w, w);
    out_gn_ = nn::GroupNorm(params_, "out.gn", w, pick_groups(w));
    out_conv_ = nn::Conv2d(params_, "out.conv", w, c, 3, 1, 1, rng);
    health_table_ = params_.add("health_table", nn::he_init({2, e}, e, rng));
    emb_mlp_ = nn::Linear(params_, "emb_mlp", e, e, rng);
}

ag::Var UNet::run_block(const Block& b, const ag::Var& x, const ag::Var& emb) const {
    auto h = ag::silu(b.gn1(b.conv1(x)));
    h = ag::add_channel_bias(h, b.emb.vec(emb));
    return ag::silu(b.gn2(b.conv2(h)));
}

ag::Var UNet::forward(const ag::Var& noisy, const ag::Var& reference, world::Health health,
                      int step) const {
    if (!noisy->val.same_shape(reference->val))
        throw ValueError("denoiser: noisy/reference shape mismatch");
    if (noisy->val.dim(0) != cfg_.channels || noisy->val.dim(1) != cfg_.image_size)
        throw ValueError("denoiser: input shape does not match model config");

    auto step_emb = ag::constant(nn::sinusoidal_embedding(step, cfg_.emb_dim));
    auto health_emb =
        ag::select_row(health_table_, health == world::Health::malignant ? 1 : 0);
    auto emb = ag::silu(emb_mlp_.vec(ag::add(step_emb, health_emb)));

    auto x = stem_(ag::concat_channels({noisy, reference}));
    auto s0 = run_block(down0_, x, emb);
    auto x1 = downc0_(s0);
    auto s1 = run_block(down1_, x1, emb);
    auto x2 = downc1_(s1);
    auto m = run_block(mid_, x2, emb);
    auto u1 = upc1_(ag::upsample_nearest2d(m, 2));
    u1 = run_block(up1_, ag::concat_channels({u1, s1}), emb);
    auto u0 = upc0_(ag::upsample_nearest2d(u1, 2));
    u0 = run_block(up0_, ag::concat_channels({u0, s0}), emb);
    return out_conv_(ag::silu(out_gn_(u0)));
}

Tensor UNet::predict(const Tensor& noisy, const Tensor& reference, world::Health health,
                     int step) const {
    ag::NoGradGuard ng;
    return forward(ag::constant(noisy), ag::constant(reference), health, step)->val;
}

Tensor predict_noise(const UNet& model, const DenoiserInput& input) {
    if (!input.noisy.same_shape(input.reference))
        throw ValueError("predict_noise: noisy/reference shape mismatch");
    if (input.step < 1) throw ValueError("predict_noise: step must be >= 1");
    if (model.params().named().empty()) throw ValueError("predict_noise: uninitialized model");
    return model.predict(input.noisy, input.reference, input.health, input.step);
}

Tensor reverse_trajectory(const NoisePredictor& predict, Tensor eps_K, const NoiseSchedule& sched,
                          bool ancestral, Rng* rng) {
    Tensor eps = std::move(eps_K);
    for (int k = sched.K; k >= 1; --k) {
        Tensor eps_hat = predict(eps, k);
        eps = denoise_step(eps, eps_hat, k, sched);
        if (ancestral && k > 1) {
            if (!rng) throw ValueError("reverse_trajectory: ancestral variant needs an rng");
            double sigma = std::sqrt(sched.beta(k));
            for (int64_t i = 0; i < eps.numel(); ++i) eps[i] += sigma * rng->normal();
        }
    }
    return eps;
}

Tensor sample_counterfactual(const UNet& model, const Tensor& x_ref, world::Health health,
                             const NoiseSchedule& sched, Rng& rng, bool ancestral) {
    Tensor eps(x_ref.shape());
    for (int64_t i = 0; i < eps.numel(); ++i) eps[i] = rng.normal();
    auto pred = [&](const Tensor& e, int k) { return model.predict(e, x_ref, health, k); };
    Tensor out = reverse_trajectory(pred, std::move(eps), sched, ancestral, &rng);
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::clamp(out[i], 0.0, 1.0);
    return out;
}

ag::Var generator_loss(const UNet& model, const Tensor& x_t, const Tensor& x_t1,
                       world::Health health, const NoiseSchedule& sched, Rng& rng) {
    const int k = rng.uniform_int(1, sched.K);
    Tensor noise(x_t1.shape());
    for (int64_t i = 0; i < noise.numel(); ++i) noise[i] = rng.normal();
    Tensor eps_k = forward_diffuse(x_t1, k, sched, noise);
    auto eps_hat = model.forward(ag::constant(eps_k), ag::constant(x_t), health, k);
    return ag::mse(ag::constant(noise), eps_hat);
}

}  // namespace cvdx::diffusion
