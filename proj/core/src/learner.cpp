#include "cvdx/learner.hpp"

#include <algorithm>

#include "cvdx/errors.hpp"

namespace cvdx::learner {

Tensor Clip::tensor() const {
    // stored frame-major [L,C,H,W]; encoder wants [C,L,H,W]
    const int hw = image_size * image_size;
    Tensor out({channels, length, image_size, image_size});
    for (int t = 0; t < length; ++t)
        for (int c = 0; c < channels; ++c) {
            const float* src = frames.data() + (static_cast<int64_t>(t) * channels + c) * hw;
            double* dst = &out.at4(c, t, 0, 0);
            for (int i = 0; i < hw; ++i) dst[i] = static_cast<double>(src[i]);
        }
    return out;
}

std::vector<Clip> extract_clips(const world::VideoRecord& video, int L, int stride) {
    if (L < 1 || stride < 1) throw ValueError("extract_clips: L and stride must be >= 1");
    const int T = video.frames_total();
    if (T == 0) throw ValueError("extract_clips: empty video");
    const int64_t fn = video.frame_numel();

    auto build = [&](int start, int len, bool padded) {
        Clip c;
        c.start_index = start;
        c.length = L;
        c.padded = padded;
        c.channels = video.channels;
        c.image_size = video.image_size;
        c.frames.resize(static_cast<size_t>(L) * fn);
        for (int i = 0; i < L; ++i) {
            int src = std::min(start + i, start + len - 1);
            src = std::min(src, T - 1);
            std::copy_n(video.frames.data() + static_cast<int64_t>(src) * fn, fn,
                        c.frames.data() + static_cast<int64_t>(i) * fn);
        }
        return c;
    };

    std::vector<Clip> clips;
    if (T < L) {
        clips.push_back(build(0, T, true));
        return clips;
    }
    const int count = (T - L) / stride + 1;
    clips.reserve(count);
    for (int i = 0; i < count; ++i) clips.push_back(build(i * stride, L, false));
    return clips;
}

namespace {
int pick_groups(int channels) {
    for (int g : {8, 4, 2})
        if (channels % g == 0) return g;
    return 1;
}
}  // namespace

ClipEncoder::ClipEncoder(const EncoderConfig& cfg) : cfg_(cfg) {
    if (cfg.image_size % 8 != 0) throw ConfigError("learner.image_size must be divisible by 8");
    Rng rng(cfg.init_seed);
    const int w = cfg.width, c = cfg.channels;
    c1_ = nn::Conv3d(params_, "c1", c, w, 3, 3, 3, 1, 2, 2, rng);
    g1_ = nn::GroupNorm(params_, "g1", w, pick_groups(w));
    c2_ = nn::Conv3d(params_, "c2", w, 2 * w, 3, 3, 3, 1, 1, 1, rng);
    g2_ = nn::GroupNorm(params_, "g2", 2 * w, pick_groups(2 * w));
    c3_ = nn::Conv3d(params_, "c3", 2 * w, 4 * w, 3, 3, 3, 1, 1, 1, rng);
    g3_ = nn::GroupNorm(params_, "g3", 4 * w, pick_groups(4 * w));
    c4_ = nn::Conv3d(params_, "c4", 4 * w, 8 * w, 3, 3, 3, 1, 1, 1, rng);
    g4_ = nn::GroupNorm(params_, "g4", 8 * w, pick_groups(8 * w));
    // the readout keeps the coarse spatial grid so positional evidence
    // survives into the per-frame embedding
    const int grid = cfg.image_size / 8;
    proj_ = nn::Linear(params_, "proj", 8 * w * grid * grid, cfg.feature_dim, rng);
}

ag::Var ClipEncoder::encode(const ag::Var& clip) const {
    if (clip->val.rank() != 4 || clip->val.dim(0) != cfg_.channels ||
        clip->val.dim(2) != cfg_.image_size || clip->val.dim(3) != cfg_.image_size)
        throw ValueError("encode: clip shape does not match encoder config");
    auto h = ag::silu(g1_(c1_(clip)));                       // [w, L, H/2, W/2]
    h = ag::avg_pool3d_spatial(ag::silu(g2_(c2_(h))), 2);    // [2w, L, H/4, W/4]
    h = ag::avg_pool3d_spatial(ag::silu(g3_(c3_(h))), 2);    // [4w, L, H/8, W/8]
    h = ag::silu(g4_(c4_(h)));                               // [8w, L, H/8, W/8]
    auto rows = ag::flatten_to_rows(h);                      // [L, 8w*(H/8)^2]
    return proj_(rows);                                      // [L, d]
}

Tensor ClipEncoder::encode_value(const Tensor& clip) const {
    ag::NoGradGuard ng;
    return encode(ag::constant(clip))->val;
}

FramePolicy frame_policy_from_name(const std::string& s) {
    if (s == "replicate") return FramePolicy::replicate;
    if (s == "center_crop1") return FramePolicy::center_crop1;
    throw ConfigError("learner.frame_policy must be replicate|center_crop1");
}

const char* frame_policy_name(FramePolicy p) {
    return p == FramePolicy::replicate ? "replicate" : "center_crop1";
}

ag::Var encode_frame(const ClipEncoder& encoder, const Tensor& frame, FramePolicy policy,
                     int clip_len) {
    if (frame.rank() != 3) throw ValueError("encode_frame: frame must be [C,H,W]");
    const int c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
    const int L = policy == FramePolicy::replicate ? clip_len : 1;
    Tensor clip({c, L, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int t = 0; t < L; ++t)
            std::copy_n(frame.ptr3(ch, 0, 0), h * w, clip.ptr4(ch, t, 0, 0));
    auto rows = encoder.encode(ag::constant(clip));
    if (L == 1) return ag::select_row(rows, 0);
    return ag::mean_rows(rows);
}

TemporalTransformer::TemporalTransformer(const TransformerConfig& cfg) : cfg_(cfg) {
    Rng rng(cfg.init_seed);
    token_ = params_.add("token", nn::uniform_init({1, cfg.dim}, -0.05, 0.05, rng));
    pos_ = params_.add("pos", nn::uniform_init({cfg.max_tokens, cfg.dim}, -0.05, 0.05, rng));
    blocks_.reserve(cfg.layers);
    for (int i = 0; i < cfg.layers; ++i)
        blocks_.emplace_back(params_, "block" + std::to_string(i), cfg.dim, cfg.heads, 4, rng);
}

FeatureSequence TemporalTransformer::aggregate(const ag::Var& frame_rows) const {
    if (frame_rows->val.rank() != 2 || frame_rows->val.dim(1) != cfg_.dim)
        throw ValueError("temporal_aggregate: feature dim mismatch");
    const int n = frame_rows->val.dim(0);
    if (n + 1 > cfg_.max_tokens)
        throw ValueError("temporal_aggregate: sequence exceeds max_tokens");
    auto x = ag::concat_rows({token_, frame_rows});
    x = ag::add(x, ag::slice_rows(pos_, 0, n + 1));
    for (const auto& b : blocks_) x = b(x);
    FeatureSequence fs;
    fs.tokens = x;
    fs.token_zero_is_temporal = true;
    return fs;
}

ag::Var encode_video(const ClipEncoder& encoder, const std::vector<Clip>& clips) {
    if (clips.empty()) throw ValueError("encode_video: no clips");
    std::vector<ag::Var> parts;
    parts.reserve(clips.size());
    for (const auto& c : clips) parts.push_back(encoder.encode(ag::constant(c.tensor())));
    return parts.size() == 1 ? parts[0] : ag::concat_rows(parts);
}

}  // namespace cvdx::learner
