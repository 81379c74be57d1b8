// learner.hpp - medical video learner: overlapping clips, a 3D convolutional
// frame encoder producing per-frame embeddings, and a temporal transformer
// that prepends a learnable temporal token to aggregate whole-video dynamics
#pragma once

#include <vector>

#include "cvdx/nn.hpp"
#include "cvdx/synthworld.hpp"

namespace cvdx::learner {

struct Clip {
    std::vector<float> frames;  // [C,L,H,W] layout after assembly
    int start_index = 0;
    int length = 0;
    bool padded = false;
    int channels = 0, image_size = 0;

    Tensor tensor() const;  // [C,L,H,W]
};

// clips start at 0, stride, 2*stride, ...; if the video is shorter than L the
// single clip repeats the final frame and is flagged padded
std::vector<Clip> extract_clips(const world::VideoRecord& video, int L, int stride);

struct EncoderConfig {
    int channels = 3;
    int image_size = 32;
    int width = 16;         // first block channels; doubles per block
    int feature_dim = 128;  // d
    uint64_t init_seed = 29;
};

// four 3D conv blocks with spatial pooling; per-frame rows are preserved and
// spatially pooled into one d-vector per frame
class ClipEncoder {
public:
    ClipEncoder() = default;
    explicit ClipEncoder(const EncoderConfig& cfg);

    ag::Var encode(const ag::Var& clip) const;  // [C,L,H,W] -> [L,d]
    Tensor encode_value(const Tensor& clip) const;

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    const EncoderConfig& config() const { return cfg_; }

private:
    EncoderConfig cfg_;
    nn::ParamStore params_;
    nn::Conv3d c1_, c2_, c3_, c4_;
    nn::GroupNorm g1_, g2_, g3_, g4_;
    nn::Linear proj_;
};

enum class FramePolicy { replicate, center_crop1 };
FramePolicy frame_policy_from_name(const std::string& s);
const char* frame_policy_name(FramePolicy p);

// single-frame embedding: replicate lifts the frame to a length-L clip and
// mean-pools the rows; center_crop1 encodes it as a length-1 clip
ag::Var encode_frame(const ClipEncoder& encoder, const Tensor& frame, FramePolicy policy,
                     int clip_len);

struct TransformerConfig {
    int dim = 128;
    int layers = 2;
    int heads = 4;
    int max_tokens = 64;  // including the temporal token
    uint64_t init_seed = 31;
};

struct FeatureSequence {
    ag::Var tokens;  // [(C*L)+1, d] after aggregation
    bool token_zero_is_temporal = false;
};

class TemporalTransformer {
public:
    TemporalTransformer() = default;
    explicit TemporalTransformer(const TransformerConfig& cfg);

    // prepends the temporal token, adds learned positional encodings, applies
    // the encoder blocks; row 0 of the result is the aggregated token
    FeatureSequence aggregate(const ag::Var& frame_rows) const;  // [N,d] -> [N+1,d]

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    const TransformerConfig& config() const { return cfg_; }

private:
    TransformerConfig cfg_;
    nn::ParamStore params_;
    ag::Var token_, pos_;
    std::vector<nn::TransformerBlock> blocks_;
};

// concatenates per-clip encodings in temporal order: [(C*L), d]
ag::Var encode_video(const ClipEncoder& encoder, const std::vector<Clip>& clips);

}  // namespace cvdx::learner
