// diffusion.hpp - conditional denoising diffusion counterfactual generator
//
// Forward corruption, a U-shaped conditional noise predictor, the
// deterministic reverse update, and full-trajectory sampling of next-stage
// frames under a chosen health state. The reverse update carries no stochastic
// term; a config flag can enable the ancestral variant for comparison.
#pragma once

#include <functional>

#include "cvdx/nn.hpp"
#include "cvdx/rng.hpp"
#include "cvdx/synthworld.hpp"
#include "cvdx/tensor.hpp"

namespace cvdx::diffusion {

struct NoiseSchedule {
    int K = 0;
    std::vector<double> beta_;       // beta_[k-1] = beta_k, k in 1..K
    std::vector<double> alpha_;      // 1 - beta_k
    std::vector<double> alpha_bar_;  // alpha_bar_[k], k in 0..K, alpha_bar_[0] = 1

    double beta(int k) const { return beta_[static_cast<size_t>(k - 1)]; }
    double alpha(int k) const { return alpha_[static_cast<size_t>(k - 1)]; }
    double alpha_bar(int k) const { return alpha_bar_[static_cast<size_t>(k)]; }
};

// linear beta interpolation; throws ConfigError on invalid bounds
NoiseSchedule build_schedule(int K, double beta_start, double beta_end);

// sqrt(abar_k) * x + sqrt(1 - abar_k) * noise; k = 0 returns x exactly
Tensor forward_diffuse(const Tensor& x, int k, const NoiseSchedule& sched, const Tensor& noise);

// (1/sqrt(alpha_k)) * (eps_k - beta_k / sqrt(1 - abar_k) * eps_hat); k >= 1
Tensor denoise_step(const Tensor& eps_k, const Tensor& eps_hat, int k, const NoiseSchedule& sched);

struct UNetConfig {
    int image_size = 32;
    int channels = 3;
    int base_width = 32;
    int emb_dim = 64;
    uint64_t init_seed = 17;
};

struct DenoiserInput {
    Tensor noisy;      // eps_k
    Tensor reference;  // previous-stage frame x_t
    world::Health health = world::Health::benign;
    int step = 1;
};

// U-shaped conditional denoiser: reference concatenated channel-wise with the
// noisy input; health embedding added to the sinusoidal step embedding and
// injected at every resolution level
class UNet {
public:
    UNet() = default;
    explicit UNet(const UNetConfig& cfg);

    ag::Var forward(const ag::Var& noisy, const ag::Var& reference, world::Health health,
                    int step) const;
    // no-grad convenience
    Tensor predict(const Tensor& noisy, const Tensor& reference, world::Health health,
                   int step) const;

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    const UNetConfig& config() const { return cfg_; }

private:
    struct Block {
        nn::Conv2d conv1, conv2;
        nn::GroupNorm gn1, gn2;
        nn::Linear emb;
    };
    ag::Var run_block(const Block& b, const ag::Var& x, const ag::Var& emb) const;

    UNetConfig cfg_;
    nn::ParamStore params_;
    nn::Conv2d stem_;
    Block down0_, down1_, mid_, up1_, up0_;
    nn::Conv2d downc0_, downc1_, upc1_, upc0_, out_conv_;
    nn::GroupNorm out_gn_;
    ag::Var health_table_;  // [2, emb_dim]
    nn::Linear emb_mlp_;
};

// validated wrapper around UNet::predict
Tensor predict_noise(const UNet& model, const DenoiserInput& input);

// eps_hat as a function of (eps_k, k); used to drive the reverse recursion
using NoisePredictor = std::function<Tensor(const Tensor& eps_k, int k)>;

// applies denoise_step for k = K..1 starting from eps_K
Tensor reverse_trajectory(const NoisePredictor& predict, Tensor eps_K,
                          const NoiseSchedule& sched, bool ancestral = false, Rng* rng = nullptr);

// draws eps_K from rng, runs the reverse recursion conditioned on (x_ref, h),
// clips the result to [0,1] at the end only
Tensor sample_counterfactual(const UNet& model, const Tensor& x_ref, world::Health health,
                             const NoiseSchedule& sched, Rng& rng, bool ancestral = false);

// Monte-Carlo single-sample generator objective: k ~ U{1..K}, n ~ N(0,I),
// mean over elements of (n - eps_hat)^2
ag::Var generator_loss(const UNet& model, const Tensor& x_t, const Tensor& x_t1,
                       world::Health health, const NoiseSchedule& sched, Rng& rng);

}  // namespace cvdx::diffusion
