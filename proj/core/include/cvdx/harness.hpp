// harness.hpp - orchestration: dataset splits, two-phase training (generator
// pretraining, then joint learner + head optimization with rule and
// diagnostic losses), inference with benign-falsification counterfactuals,
// the ablation runner, static-pair mode, and run-directory management
#pragma once

#include <map>
#include <string>
#include <vector>

#include "cvdx/config.hpp"
#include "cvdx/ddp.hpp"
#include "cvdx/diffusion.hpp"
#include "cvdx/learner.hpp"
#include "cvdx/rules.hpp"

namespace cvdx::harness {

struct RunRecord {
    std::string config_json;
    std::string config_hash;
    std::vector<double> cg_loss_curve;
    std::vector<double> joint_loss_curve;
    std::map<std::string, std::string> checkpoints;  // name -> run-relative path
    std::map<std::string, double> final_metrics;
    std::map<std::string, std::pair<double, double>> fold_metrics;  // mean, std

    std::string to_json() const;
    static RunRecord from_json_text(const std::string& text);
};

// ---- datasets ---------------------------------------------------------------

std::vector<world::VideoRecord> supervised_split(const ExperimentConfig& cfg, bool train);
std::vector<world::VideoRecord> anomaly_split(const ExperimentConfig& cfg, bool train);

// index of the representative frame of a stage (its last frame)
int stage_keyframe(const ExperimentConfig& cfg, int stage);

// ---- generator phase ---------------------------------------------------------

// consecutive-keyframe training pairs referencing records by index
struct PairRef {
    int record = 0;
    int t0 = 0, t1 = 0;  // frame indices
};

std::vector<PairRef> supervised_pairs(const ExperimentConfig& cfg, int record_count);
std::vector<PairRef> weak_pairs(const ExperimentConfig& cfg, int record_count);

diffusion::UNetConfig generator_config(const ExperimentConfig& cfg);
diffusion::NoiseSchedule schedule_of(const ExperimentConfig& cfg);
// fingerprint stored in generator checkpoints and checked before joint training
uint64_t generator_fingerprint(const ExperimentConfig& cfg);

diffusion::UNet pretrain_generator(const ExperimentConfig& cfg,
                                   const std::vector<world::VideoRecord>& records,
                                   const std::vector<PairRef>& pairs,
                                   std::vector<double>& loss_curve);

// held-out mean generator loss (fixed draws; reproducible)
double generator_validation_loss(const ExperimentConfig& cfg, const diffusion::UNet& gen,
                                 const std::vector<world::VideoRecord>& records,
                                 const std::vector<PairRef>& pairs, uint64_t seed);

// per-case counterfactual images synthesized from the stage-t keyframe
struct CfPair {
    Tensor benign, malignant;
};
std::vector<CfPair> build_cf_cache(const ExperimentConfig& cfg, const diffusion::UNet& gen,
                                   const std::vector<world::VideoRecord>& records);
// weak mode: one benign + one malignant synthesis per snippet, from its first frame
std::vector<std::vector<CfPair>> build_cf_cache_weak(const ExperimentConfig& cfg,
                                                     const diffusion::UNet& gen,
                                                     const std::vector<world::VideoRecord>& recs);

// ---- joint phase --------------------------------------------------------------

struct LearnerStack {
    learner::ClipEncoder encoder;
    learner::TemporalTransformer transformer;
    ddp::PredictionHead head;
    learner::FramePolicy policy = learner::FramePolicy::replicate;
    int clip_len = 16;
    bool has_transformer = true;

    LearnerStack() = default;
    LearnerStack(const ExperimentConfig& cfg, int num_outputs);
    std::vector<ag::Var> trainable() const;
    void save(const std::string& path, const ExperimentConfig& cfg) const;
    void load(const std::string& path);
};

void train_supervised(const ExperimentConfig& cfg, LearnerStack& stack,
                      const std::vector<world::VideoRecord>& train_set,
                      const std::vector<CfPair>& cf_cache, std::vector<double>& loss_curve);

struct SupervisedEval {
    double recall = 0, precision = 0, accuracy = 0, recall_at_1 = 0;
    std::map<std::string, std::pair<double, double>> fold_stats;
    std::map<std::string, double> as_map() const;
};
SupervisedEval eval_supervised(const ExperimentConfig& cfg, const LearnerStack& stack,
                               const std::vector<world::VideoRecord>& eval_set,
                               const std::vector<CfPair>& cf_cache);

void train_weak(const ExperimentConfig& cfg, LearnerStack& stack,
                const std::vector<world::VideoRecord>& train_set,
                const std::vector<std::vector<CfPair>>& cf_cache,
                std::vector<double>& loss_curve);

struct WeakEval {
    double auc = 0, ap = 0;
    std::vector<std::vector<double>> frame_scores;  // per video
    std::map<std::string, double> as_map() const;
};
WeakEval eval_weak(const ExperimentConfig& cfg, const LearnerStack& stack,
                   const std::vector<world::VideoRecord>& eval_set,
                   const std::vector<std::vector<CfPair>>& cf_cache);

// static-pair mode (no temporal transformer)
void train_static_pair(const ExperimentConfig& cfg, LearnerStack& stack,
                       const std::vector<world::PairCase>& pairs,
                       std::vector<double>& loss_curve);
double eval_static_pair_auc(const ExperimentConfig& cfg, const LearnerStack& stack,
                            const std::vector<world::PairCase>& pairs);
std::vector<world::PairCase> make_pair_dataset(const ExperimentConfig& cfg, int count,
                                               uint64_t seed_offset);

// ---- audit --------------------------------------------------------------------

rules::RuleAuditReport run_audit(const ExperimentConfig& cfg, const LearnerStack& stack,
                                 const std::vector<world::VideoRecord>& records,
                                 const std::vector<CfPair>& cf_cache, int bins = 6,
                                 double dominance = 2.0);

// ---- run-directory operations (CLI surface) ------------------------------------

std::string make_run_dir(const std::string& out_root, const ExperimentConfig& cfg);
void write_run_record(const std::string& run_dir, const RunRecord& rec);

RunRecord run_pretrain_cg(const ExperimentConfig& cfg, const std::string& run_dir);
RunRecord run_train(const ExperimentConfig& cfg, const std::string& run_dir,
                    const std::string& cg_checkpoint);
// records: evaluate these cases instead of the generated eval split
RunRecord run_eval(const ExperimentConfig& cfg, const std::string& run_dir,
                   const std::string& cg_checkpoint, const std::string& learner_checkpoint,
                   const std::vector<world::VideoRecord>* records = nullptr);
RunRecord run_static_pair(const ExperimentConfig& cfg, const std::string& run_dir);

struct AblationRow {
    std::string grid;  // "components" | "rules"
    std::string name;
    bool crs = false, ddp = false;
    double mean = 0, std = 0;
    std::vector<double> per_seed;
};
struct AblationResult {
    std::vector<AblationRow> rows;
    std::string primary_metric;  // recall_at_1 or auc/ap by mode
};
// runs the 2x2 component grid and the rule-wise grid over >= seeds seeds;
// identical configurations are computed once (training is deterministic)
AblationResult run_ablation(const ExperimentConfig& cfg, const std::string& out_dir, int seeds = 3);

}  // namespace cvdx::harness
