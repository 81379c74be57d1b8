#include "cvdx/nn.hpp"

#include <algorithm>
#include <stdexcept>

namespace cvdx::nn {

ag::Var ParamStore::add(const std::string& name, Tensor init) {
    for (const auto& [n, v] : params_)
        if (n == name) throw std::invalid_argument("duplicate parameter name: " + name);
    auto var = ag::leaf(std::move(init), true);
    params_.emplace_back(name, var);
    return var;
}

std::vector<ag::Var> ParamStore::vars() const {
    std::vector<ag::Var> out;
    out.reserve(params_.size());
    for (const auto& [n, v] : params_) out.push_back(v);
    return out;
}

ag::Var ParamStore::find(const std::string& name) const {
    for (const auto& [n, v] : params_)
        if (n == name) return v;
    return nullptr;
}

int64_t ParamStore::count_scalars() const {
    int64_t n = 0;
    for (const auto& [nm, v] : params_) n += v->val.numel();
    return n;
}

Tensor he_init(std::vector<int> shape, int fan_in, Rng& rng) {
    Tensor t(shape);
    double std = std::sqrt(2.0 / std::max(1, fan_in));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, std);
    return t;
}

Tensor uniform_init(std::vector<int> shape, double lo, double hi, Rng& rng) {
    Tensor t(shape);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

Tensor sinusoidal_embedding(int index, int dim) {
    Tensor e({dim});
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * i / std::max(1, half - 1));
        e[i] = std::sin(index * freq);
        e[half + i] = std::cos(index * freq);
    }
    return e;
}

Linear::Linear(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng) {
    w = ps.add(prefix + ".w", he_init({in, out}, in, rng));
    b = ps.add(prefix + ".b", Tensor({out}, 0.0));
}

ag::Var Linear::vec(const ag::Var& v) const {
    const int in = w->val.dim(0);
    const int out = w->val.dim(1);
    auto row = ag::reshape(v, {1, in});
    return ag::reshape(ag::linear(row, w, b), {out});
}

Conv2d::Conv2d(ParamStore& ps, const std::string& prefix, int in, int out, int k, int stride,
               int pad, Rng& rng)
    : stride(stride), pad(pad) {
    w = ps.add(prefix + ".w", he_init({out, in, k, k}, in * k * k, rng));
    b = ps.add(prefix + ".b", Tensor({out}, 0.0));
}

Conv3d::Conv3d(ParamStore& ps, const std::string& prefix, int in, int out, int kt, int kh, int kw,
               int st, int sh, int sw, Rng& rng)
    : st(st), sh(sh), sw(sw), pt(kt / 2), ph(kh / 2), pw(kw / 2) {
    w = ps.add(prefix + ".w", he_init({out, in, kt, kh, kw}, in * kt * kh * kw, rng));
    b = ps.add(prefix + ".b", Tensor({out}, 0.0));
}

GroupNorm::GroupNorm(ParamStore& ps, const std::string& prefix, int channels, int groups)
    : groups(groups) {
    gamma = ps.add(prefix + ".gamma", Tensor({channels}, 1.0));
    beta = ps.add(prefix + ".beta", Tensor({channels}, 0.0));
}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& prefix, int dim) {
    gamma = ps.add(prefix + ".gamma", Tensor({dim}, 1.0));
    beta = ps.add(prefix + ".beta", Tensor({dim}, 0.0));
}

TransformerBlock::TransformerBlock(ParamStore& ps, const std::string& prefix, int dim, int heads,
                                   int ff_mult, Rng& rng)
    : heads(heads), dim(dim) {
    if (dim % heads != 0) throw std::invalid_argument("transformer dim must divide heads");
    ln1 = LayerNorm(ps, prefix + ".ln1", dim);
    ln2 = LayerNorm(ps, prefix + ".ln2", dim);
    wq = Linear(ps, prefix + ".wq", dim, dim, rng);
    wk = Linear(ps, prefix + ".wk", dim, dim, rng);
    wv = Linear(ps, prefix + ".wv", dim, dim, rng);
    wo = Linear(ps, prefix + ".wo", dim, dim, rng);
    ff1 = Linear(ps, prefix + ".ff1", dim, dim * ff_mult, rng);
    ff2 = Linear(ps, prefix + ".ff2", dim * ff_mult, dim, rng);
}

ag::Var TransformerBlock::operator()(const ag::Var& x) const {
    const int dh = dim / heads;
    auto h = ln1(x);
    auto q = wq(h);
    auto k = wk(h);
    auto v = wv(h);
    std::vector<ag::Var> head_outs;
    head_outs.reserve(heads);
    const double scl = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int i = 0; i < heads; ++i) {
        auto qi = ag::slice_cols(q, i * dh, (i + 1) * dh);
        auto ki = ag::slice_cols(k, i * dh, (i + 1) * dh);
        auto vi = ag::slice_cols(v, i * dh, (i + 1) * dh);
        auto att = ag::softmax_rows(ag::scale(ag::matmul(qi, ag::transpose2d(ki)), scl));
        head_outs.push_back(ag::matmul(att, vi));
    }
    auto attn = wo(ag::concat_cols(head_outs));
    auto y = ag::add(x, attn);
    auto ff = ff2(ag::silu(ff1(ln2(y))));
    return ag::add(y, ff);
}

AdamW::AdamW(std::vector<ag::Var> params, double lr, double weight_decay)
    : params_(std::move(params)), lr_(lr), wd_(weight_decay) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p->val.shape(), 0.0);
        v_.emplace_back(p->val.shape(), 0.0);
    }
}

void AdamW::step(double lr_override) {
    const double lr = lr_override >= 0.0 ? lr_override : lr_;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t_;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        auto& p = params_[i];
        if (!p->grad_ready) continue;
        double* w = p->val.data();
        const double* g = p->grad.data();
        double* m = m_[i].data();
        double* v = v_[i].data();
        for (int64_t j = 0; j < p->val.numel(); ++j) {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            double mh = m[j] / bc1;
            double vh = v[j] / bc2;
            w[j] -= lr * (mh / (std::sqrt(vh) + eps) + wd_ * w[j]);
        }
    }
}

void AdamW::zero_grad() { ag::zero_grad(params_); }

double cosine_lr(double base, int64_t step, int64_t total) {
    if (total <= 0) return base;
    double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(total));
    return base * 0.5 * (1.0 + std::cos(frac * 3.14159265358979323846));
}

}  // namespace cvdx::nn
