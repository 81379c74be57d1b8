// synthworld.hpp - procedural multi-stage examination videos with exact
// counterfactual oracles
//
// The world has a known causal structure: a latent health state drives how
// candidate tissue sites respond across examination stages, while nuisance
// factors (illumination, translation, per-channel gain) vary independently of
// health. Because every case is a pure function of (config, seed), the true
// counterfactual under the flipped health state is renderable exactly.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvdx/tensor.hpp"

namespace cvdx::world {

enum class Health { benign, malignant };

inline const char* health_name(Health h) { return h == Health::benign ? "benign" : "malignant"; }
Health health_from_name(const std::string& s);
inline Health opposite(Health h) { return h == Health::benign ? Health::malignant : Health::benign; }

// severity at or above this value makes a candidate site a lesion
inline constexpr double kLesionThreshold = 0.5;

struct ResponseStrength {
    double benign_mean = 0.12;     // uniform reagent response amplitude
    double malignant_mean = 0.50;  // lesion-local brightening amplitude
    double std = 0.05;             // texture roughening amplitude
};

struct NuisanceConfig {
    double illumination_range = 0.10;  // brightness scale in 1 +/- range
    int translation_range_px = 2;      // integer shift in [-r, r] per axis
    double color_jitter_range = 0.06;  // per-channel gain in 1 +/- range
    double glare_prob = 0.05;          // chance of a transient specular blob per frame
    double glare_amp = 0.40;           // peak glare brightness added
};

struct WorldConfig {
    int image_size = 32;
    int channels = 3;
    int num_stages = 4;  // mirrors saline / acetic / alcohol / iodine
    int frames_per_stage = 4;
    int num_positions = 12;  // clock-sector layout
    int lesion_count_min = 1;
    int lesion_count_max = 3;
    ResponseStrength response;
    NuisanceConfig nuisance;
    uint64_t seed = 0;

    // test hooks: force the sampled health / candidate sites
    std::optional<Health> force_health;
    std::optional<std::vector<int>> force_positions;

    void validate() const;  // throws ConfigError naming the bad field
    int frames_total() const { return num_stages * frames_per_stage; }
};

struct NuisanceSample {
    double brightness = 1.0;
    int dx = 0, dy = 0;
    std::array<double, 3> channel_gain{1.0, 1.0, 1.0};
    // transient specular glare blob; amp 0 means absent
    double glare_amp = 0.0;
    double glare_x = 0.0, glare_y = 0.0, glare_sigma = 1.0;
};

struct TissueState {
    std::vector<double> severity;       // per position, in [0,1]
    std::vector<int> candidates;        // positions that carry a site marker
    Tensor base_texture;                // [C,H,W], site markers folded in
    Health health = Health::benign;
};

struct VideoRecord {
    std::vector<float> frames;  // [T,C,H,W] in [0,1]
    std::vector<int> stage_ids;
    Health health = Health::benign;
    std::vector<uint8_t> labels;  // positions whose severity >= threshold
    std::vector<NuisanceSample> nuisance_trace;
    std::string case_id;
    uint64_t seed = 0;
    int image_size = 0, channels = 0;

    int frames_total() const { return static_cast<int>(stage_ids.size()); }
    int64_t frame_numel() const {
        return static_cast<int64_t>(channels) * image_size * image_size;
    }
    // frame as a [C,H,W] double tensor
    Tensor frame(int t) const;
    bool operator==(const VideoRecord& o) const;
};

// ---- core operations -------------------------------------------------------

// deterministic in (config, seed); nuisance independent of health
VideoRecord generate_case(const WorldConfig& config, uint64_t seed);

// derives the tissue state (texture, candidates, severities) for a case seed
TissueState tissue_from_seed(const WorldConfig& config, uint64_t seed, Health health);

// pure render of one frame; pixels clipped to [0,1]
Tensor render_frame(const TissueState& state, int stage, const NuisanceSample& nuisance,
                    const WorldConfig& config);

// exact re-render of the same case under target_health (same texture, same
// nuisance trace, severities re-sampled across the threshold as required)
VideoRecord oracle_counterfactual(const VideoRecord& record, Health target_health,
                                  const WorldConfig& config);

// union of angular sectors for the given positions, [H,W] in {0,1};
// (dx,dy) shifts the mask like the frame translation nuisance
Tensor sector_mask(const WorldConfig& config, const std::vector<int>& positions, int dx = 0,
                   int dy = 0);

// per-case seed for dataset generation, independent of scheduling
uint64_t case_seed(const WorldConfig& config, int case_index);

// balanced dataset: even indices benign, odd malignant
std::vector<VideoRecord> make_dataset(const WorldConfig& config, int count);

// ---- weak-supervision (anomaly) world --------------------------------------

struct AnomalyConfig {
    int image_size = 16;
    int channels = 3;
    int num_snippets = 32;
    int snippet_len = 16;
    int event_count_min = 1;
    int event_count_max = 2;
    int event_len_min = 40;
    int event_len_max = 120;
    double event_strength = 0.55;
    double illumination_range = 0.08;
    int translation_range_px = 1;
    uint64_t seed = 0;

    void validate() const;
    int frames_total() const { return num_snippets * snippet_len; }
};

// video-level label only (labels = {0} or {1}); frame truth re-derivable below
VideoRecord generate_anomaly_case(const AnomalyConfig& config, uint64_t seed, bool anomalous);

// per-frame ground truth for evaluation, recomputed from the seed
std::vector<uint8_t> anomaly_frame_flags(const AnomalyConfig& config, uint64_t seed,
                                         bool anomalous);

// ---- static-pair (bilateral) world ------------------------------------------

struct PairCase {
    Tensor left, right;  // [C,H,W]
    bool left_malignant = false, right_malignant = false;
    uint64_t seed = 0;
};

// mirrored pair, lesion on at most one side
PairCase generate_pair_case(const WorldConfig& config, uint64_t seed);

}  // namespace cvdx::world
