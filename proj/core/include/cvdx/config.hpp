// config.hpp - experiment configuration: defaults, JSON file parsing,
// environment overrides (CVDX_ prefix, "__" nests sections), content hashing
#pragma once

#include <cstdint>
#include <string>

#include "cvdx/rules.hpp"
#include "cvdx/synthworld.hpp"

namespace cvdx::harness {

enum class Mode { supervised_sites, weak_anomaly, static_pair };
Mode mode_from_name(const std::string& s);
const char* mode_name(Mode m);

struct DiffusionConfig {
    int steps = 1000;  // K
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int base_width = 32;
    int emb_dim = 64;
    bool ancestral = false;  // stochastic reverse variant, off by default
};

struct LearnerConfig {
    int clip_len = 16;  // L
    int stride = 8;
    int feature_dim = 128;  // d
    int width = 16;
    int transformer_layers = 2;
    int heads = 4;
    std::string frame_policy = "replicate";  // replicate | center_crop1
};

struct TrainConfig {
    int batch_size = 8;
    double lr = 1e-4;
    double weight_decay = 0.01;
    std::string schedule = "cosine";
    int cg_iters = 2000;
    int joint_iters = 3000;
    uint64_t seed = 0;
    int log_every = 10;
};

struct EvalConfig {
    double threshold = 0.5;
    int folds = 5;
};

struct DataConfig {
    int train_cases = 400;
    int eval_cases = 100;
    int key_stage_t = 1;   // acetic-analog stage index
    int key_stage_t1 = 3;  // iodine-analog stage index
};

struct DdpConfig {
    bool enabled = true;
    double mil_topk_frac = 0.1;
};

struct ExperimentConfig {
    Mode mode = Mode::supervised_sites;
    world::WorldConfig world;
    world::AnomalyConfig anomaly;
    DiffusionConfig diffusion;
    LearnerConfig learner;
    rules::RuleWeights rules;
    bool rules_enabled = true;
    DdpConfig ddp;
    TrainConfig train;
    EvalConfig eval;
    DataConfig data;

    void validate() const;
    std::string to_json() const;  // complete snapshot, defaults included
    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    // CVDX_<section>__<key>=value, e.g. CVDX_train__lr=2e-4
    void apply_env_overrides();
    uint64_t content_hash() const;
    std::string content_hash_hex() const;
};

}  // namespace cvdx::harness
