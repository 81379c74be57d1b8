#include "cvdx/ddp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cvdx/errors.hpp"

namespace cvdx::ddp {

PredictionHead::PredictionHead(int feature_dim, int num_outputs, uint64_t init_seed)
    : outputs_(num_outputs) {
    if (feature_dim < 1 || num_outputs < 1)
        throw ConfigError("head dimensions must be positive");
    Rng rng(init_seed);
    lin_ = nn::Linear(params_, "head", feature_dim, num_outputs, rng);
}

ag::Var PredictionHead::logits(const ag::Var& feature) const {
    if (feature->val.rank() != 1 || feature->val.dim(0) != lin_.w->val.dim(0))
        throw ValueError("head: feature dimension mismatch");
    return lin_.vec(feature);
}

ag::Var video_logits(const PredictionHead& head, const learner::FeatureSequence& seq) {
    if (!seq.token_zero_is_temporal)
        throw ValueError("video_logits: feature sequence lacks the temporal token");
    return head.logits(ag::select_row(seq.tokens, 0));
}

ag::Var frame_logits(const PredictionHead& head, const learner::ClipEncoder& encoder,
                     const Tensor& frame, learner::FramePolicy policy, int clip_len) {
    return head.logits(learner::encode_frame(encoder, frame, policy, clip_len));
}

ag::Var fuse_predict(const ag::Var& z_video, const ag::Var& z_fact, const ag::Var& z_cf) {
    if (!z_video->val.same_shape(z_fact->val) || !z_video->val.same_shape(z_cf->val))
        throw ValueError("fuse_predict: logit length mismatch");
    return ag::sigmoid(ag::sub(ag::add(z_video, z_fact), z_cf));
}

ag::Var diagnosis_loss(const ag::Var& y_hat, const std::vector<int>& y) {
    if (y_hat->val.numel() != static_cast<int64_t>(y.size()))
        throw ValueError("diagnosis_loss: length mismatch");
    Tensor targets({static_cast<int>(y.size())});
    for (size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0 && y[i] != 1) throw ValueError("diagnosis_loss: labels must be binary");
        targets[static_cast<int64_t>(i)] = y[i];
    }
    return ag::bce(y_hat, targets, 1e-7);
}

ag::Var mil_pool(const ag::Var& snippet_scores, double topk_frac) {
    if (snippet_scores->val.rank() != 1 || snippet_scores->val.numel() == 0)
        throw ValueError("mil_pool: empty scores");
    const int s = static_cast<int>(snippet_scores->val.numel());
    const int k = std::max(1, static_cast<int>(std::ceil(topk_frac * s)));
    std::vector<int> idx(s);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return snippet_scores->val[a] > snippet_scores->val[b];
    });
    idx.resize(k);
    return ag::mean_all(ag::gather(snippet_scores, idx));
}

std::vector<double> propagate_scores(const std::vector<double>& snippet_scores,
                                     const std::vector<std::pair<int, int>>& snippet_spans,
                                     int total_frames) {
    if (snippet_scores.size() != snippet_spans.size())
        throw ValueError("propagate_scores: scores/spans length mismatch");
    std::vector<double> out(total_frames, 0.0);
    std::vector<uint8_t> covered(total_frames, 0);
    for (size_t i = 0; i < snippet_spans.size(); ++i) {
        auto [start, end] = snippet_spans[i];
        if (start < 0 || end > total_frames || start >= end)
            throw ValueError("propagate_scores: span out of range");
        for (int f = start; f < end; ++f) {
            out[f] = covered[f] ? std::max(out[f], snippet_scores[i]) : snippet_scores[i];
            covered[f] = 1;
        }
    }
    for (int f = 0; f < total_frames; ++f)
        if (!covered[f])
            throw ValueError("propagate_scores: frame " + std::to_string(f) + " not covered");
    return out;
}

}  // namespace cvdx::ddp
