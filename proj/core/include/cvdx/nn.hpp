// nn.hpp - small neural-network toolkit: named parameters, layers, AdamW
#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "cvdx/autograd.hpp"
#include "cvdx/rng.hpp"

namespace cvdx::nn {

// named parameter registry; owns the leaf Vars of one model
class ParamStore {
public:
    ag::Var add(const std::string& name, Tensor init);
    const std::vector<std::pair<std::string, ag::Var>>& named() const { return params_; }
    std::vector<ag::Var> vars() const;
    ag::Var find(const std::string& name) const;
    int64_t count_scalars() const;

private:
    std::vector<std::pair<std::string, ag::Var>> params_;
};

Tensor he_init(std::vector<int> shape, int fan_in, Rng& rng);
Tensor uniform_init(std::vector<int> shape, double lo, double hi, Rng& rng);

// sinusoidal positional/step embedding of an integer index
Tensor sinusoidal_embedding(int index, int dim);

struct Linear {
    ag::Var w, b;  // w [in,out]
    Linear() = default;
    Linear(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng);
    ag::Var operator()(const ag::Var& x) const { return ag::linear(x, w, b); }
    // single vector [in] -> [out]
    ag::Var vec(const ag::Var& v) const;
};

struct Conv2d {
    ag::Var w, b;
    int stride = 1, pad = 1;
    Conv2d() = default;
    Conv2d(ParamStore& ps, const std::string& prefix, int in, int out, int k, int stride, int pad,
           Rng& rng);
    ag::Var operator()(const ag::Var& x) const { return ag::conv2d(x, w, b, stride, pad); }
};

struct Conv3d {
    ag::Var w, b;
    int st = 1, sh = 1, sw = 1, pt = 1, ph = 1, pw = 1;
    Conv3d() = default;
    Conv3d(ParamStore& ps, const std::string& prefix, int in, int out, int kt, int kh, int kw,
           int st, int sh, int sw, Rng& rng);
    ag::Var operator()(const ag::Var& x) const {
        return ag::conv3d(x, w, b, st, sh, sw, pt, ph, pw);
    }
};

struct GroupNorm {
    ag::Var gamma, beta;
    int groups = 1;
    GroupNorm() = default;
    GroupNorm(ParamStore& ps, const std::string& prefix, int channels, int groups);
    ag::Var operator()(const ag::Var& x) const { return ag::group_norm(x, gamma, beta, groups); }
};

struct LayerNorm {
    ag::Var gamma, beta;
    LayerNorm() = default;
    LayerNorm(ParamStore& ps, const std::string& prefix, int dim);
    ag::Var operator()(const ag::Var& x) const { return ag::layer_norm(x, gamma, beta); }
};

// pre-norm transformer encoder block with multi-head self-attention
struct TransformerBlock {
    LayerNorm ln1, ln2;
    Linear wq, wk, wv, wo, ff1, ff2;
    int heads = 4, dim = 0;
    TransformerBlock() = default;
    TransformerBlock(ParamStore& ps, const std::string& prefix, int dim, int heads, int ff_mult,
                     Rng& rng);
    ag::Var operator()(const ag::Var& x) const;  // [N,d] -> [N,d]
};

class AdamW {
public:
    AdamW(std::vector<ag::Var> params, double lr, double weight_decay = 0.01);
    // lr_override < 0 means use base lr
    void step(double lr_override = -1.0);
    void zero_grad();
    double base_lr() const { return lr_; }

private:
    std::vector<ag::Var> params_;
    std::vector<Tensor> m_, v_;
    double lr_, wd_;
    int64_t t_ = 0;
};

// cosine decay from base to 0 across total steps
double cosine_lr(double base, int64_t step, int64_t total);

}  // namespace cvdx::nn
