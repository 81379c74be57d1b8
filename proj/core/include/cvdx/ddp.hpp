// ddp.hpp - dual diagnostic prediction: video-level logits from the temporal
// token, frame-level factual/counterfactual logits through a shared head,
// additive contrastive fusion, supervised BCE, and the weak-supervision
// (multiple-instance) pooling
#pragma once

#include <utility>
#include <vector>

#include "cvdx/learner.hpp"

namespace cvdx::ddp {

// one linear map d -> P shared across the video-level and frame-level paths
class PredictionHead {
public:
    PredictionHead() = default;
    PredictionHead(int feature_dim, int num_outputs, uint64_t init_seed = 37);

    ag::Var logits(const ag::Var& feature) const;  // [d] -> [P]
    int outputs() const { return outputs_; }

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

private:
    nn::ParamStore params_;
    nn::Linear lin_;
    int outputs_ = 0;
};

// head applied to the temporal-token row of an aggregated feature sequence
ag::Var video_logits(const PredictionHead& head, const learner::FeatureSequence& seq);

// head(encode_frame(frame))
ag::Var frame_logits(const PredictionHead& head, const learner::ClipEncoder& encoder,
                     const Tensor& frame, learner::FramePolicy policy, int clip_len);

// sigmoid(z_video + z_fact - z_cf), elementwise
ag::Var fuse_predict(const ag::Var& z_video, const ag::Var& z_fact, const ag::Var& z_cf);

// mean binary cross entropy with probabilities clamped to [1e-7, 1-1e-7];
// y entries must be 0/1
ag::Var diagnosis_loss(const ag::Var& y_hat, const std::vector<int>& y);

// mean of the top-k snippet scores, k = max(1, ceil(topk_frac * S))
ag::Var mil_pool(const ag::Var& snippet_scores, double topk_frac = 0.1);

// frame f gets its snippet's score; overlapping spans resolve by max;
// spans are [start, end) and must cover every frame index
std::vector<double> propagate_scores(const std::vector<double>& snippet_scores,
                                     const std::vector<std::pair<int, int>>& snippet_spans,
                                     int total_frames);

}  // namespace cvdx::ddp
