#include "cvdx/config.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "cvdx/errors.hpp"
#include "cvdx/learner.hpp"
#include "cvdx/rng.hpp"

extern char** environ;

using nlohmann::json;

namespace cvdx::harness {

Mode mode_from_name(const std::string& s) {
    if (s == "supervised_sites") return Mode::supervised_sites;
    if (s == "weak_anomaly") return Mode::weak_anomaly;
    if (s == "static_pair") return Mode::static_pair;
    throw ConfigError("mode must be supervised_sites|weak_anomaly|static_pair");
}

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::supervised_sites: return "supervised_sites";
        case Mode::weak_anomaly: return "weak_anomaly";
        case Mode::static_pair: return "static_pair";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    world.validate();
    anomaly.validate();
    rules.validate();
    if (diffusion.steps < 1) throw ConfigError("diffusion.steps must be >= 1");
    if (!(diffusion.beta_start > 0 && diffusion.beta_start <= diffusion.beta_end &&
          diffusion.beta_end < 1))
        throw ConfigError("diffusion.beta bounds invalid");
    if (learner.clip_len < 1 || learner.stride < 1)
        throw ConfigError("learner.clip_len and learner.stride must be >= 1");
    if (learner.feature_dim < 4) throw ConfigError("learner.feature_dim too small");
    if (learner.feature_dim % learner.heads != 0)
        throw ConfigError("learner.feature_dim must be divisible by learner.heads");
    cvdx::learner::frame_policy_from_name(learner.frame_policy);
    if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (train.lr <= 0) throw ConfigError("train.lr must be > 0");
    if (train.schedule != "cosine" && train.schedule != "constant")
        throw ConfigError("train.schedule must be cosine|constant");
    if (!(eval.threshold > 0.0 && eval.threshold < 1.0))
        throw ConfigError("eval.threshold must be in (0,1)");
    if (eval.folds < 2) throw ConfigError("eval.folds must be >= 2");
    if (data.train_cases < 2 || data.eval_cases < 1)
        throw ConfigError("data.train_cases/eval_cases too small");
    if (mode == Mode::supervised_sites) {
        if (data.key_stage_t < 0 || data.key_stage_t1 >= world.num_stages ||
            data.key_stage_t >= data.key_stage_t1)
            throw ConfigError("data.key_stage_t/key_stage_t1 must be ordered stages");
    }
    if (ddp.mil_topk_frac <= 0 || ddp.mil_topk_frac > 1)
        throw ConfigError("ddp.mil_topk_frac must be in (0,1]");
}

namespace {

json world_to_json(const world::WorldConfig& w) {
    json j;
    j["image_size"] = w.image_size;
    j["channels"] = w.channels;
    j["num_stages"] = w.num_stages;
    j["frames_per_stage"] = w.frames_per_stage;
    j["num_positions"] = w.num_positions;
    j["lesion_count_min"] = w.lesion_count_min;
    j["lesion_count_max"] = w.lesion_count_max;
    j["response"] = {{"benign_mean", w.response.benign_mean},
                     {"malignant_mean", w.response.malignant_mean},
                     {"std", w.response.std}};
    j["nuisance"] = {{"illumination_range", w.nuisance.illumination_range},
                     {"translation_range_px", w.nuisance.translation_range_px},
                     {"color_jitter_range", w.nuisance.color_jitter_range},
                     {"glare_prob", w.nuisance.glare_prob},
                     {"glare_amp", w.nuisance.glare_amp}};
    j["seed"] = w.seed;
    return j;
}

void world_from_json(const json& j, world::WorldConfig& w) {
    w.image_size = j.value("image_size", w.image_size);
    w.channels = j.value("channels", w.channels);
    w.num_stages = j.value("num_stages", w.num_stages);
    w.frames_per_stage = j.value("frames_per_stage", w.frames_per_stage);
    w.num_positions = j.value("num_positions", w.num_positions);
    w.lesion_count_min = j.value("lesion_count_min", w.lesion_count_min);
    w.lesion_count_max = j.value("lesion_count_max", w.lesion_count_max);
    if (j.contains("response")) {
        const auto& r = j["response"];
        w.response.benign_mean = r.value("benign_mean", w.response.benign_mean);
        w.response.malignant_mean = r.value("malignant_mean", w.response.malignant_mean);
        w.response.std = r.value("std", w.response.std);
    }
    if (j.contains("nuisance")) {
        const auto& n = j["nuisance"];
        w.nuisance.illumination_range = n.value("illumination_range", w.nuisance.illumination_range);
        w.nuisance.translation_range_px =
            n.value("translation_range_px", w.nuisance.translation_range_px);
        w.nuisance.color_jitter_range = n.value("color_jitter_range", w.nuisance.color_jitter_range);
        w.nuisance.glare_prob = n.value("glare_prob", w.nuisance.glare_prob);
        w.nuisance.glare_amp = n.value("glare_amp", w.nuisance.glare_amp);
    }
    w.seed = j.value("seed", w.seed);
}

json anomaly_to_json(const world::AnomalyConfig& a) {
    json j;
    j["image_size"] = a.image_size;
    j["channels"] = a.channels;
    j["num_snippets"] = a.num_snippets;
    j["snippet_len"] = a.snippet_len;
    j["event_count_min"] = a.event_count_min;
    j["event_count_max"] = a.event_count_max;
    j["event_len_min"] = a.event_len_min;
    j["event_len_max"] = a.event_len_max;
    j["event_strength"] = a.event_strength;
    j["illumination_range"] = a.illumination_range;
    j["translation_range_px"] = a.translation_range_px;
    j["seed"] = a.seed;
    return j;
}

void anomaly_from_json(const json& j, world::AnomalyConfig& a) {
    a.image_size = j.value("image_size", a.image_size);
    a.channels = j.value("channels", a.channels);
    a.num_snippets = j.value("num_snippets", a.num_snippets);
    a.snippet_len = j.value("snippet_len", a.snippet_len);
    a.event_count_min = j.value("event_count_min", a.event_count_min);
    a.event_count_max = j.value("event_count_max", a.event_count_max);
    a.event_len_min = j.value("event_len_min", a.event_len_min);
    a.event_len_max = j.value("event_len_max", a.event_len_max);
    a.event_strength = j.value("event_strength", a.event_strength);
    a.illumination_range = j.value("illumination_range", a.illumination_range);
    a.translation_range_px = j.value("translation_range_px", a.translation_range_px);
    a.seed = j.value("seed", a.seed);
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["mode"] = mode_name(c.mode);
    j["world"] = world_to_json(c.world);
    j["anomaly"] = anomaly_to_json(c.anomaly);
    j["diffusion"] = {{"steps", c.diffusion.steps},
                      {"beta_start", c.diffusion.beta_start},
                      {"beta_end", c.diffusion.beta_end},
                      {"base_width", c.diffusion.base_width},
                      {"emb_dim", c.diffusion.emb_dim},
                      {"ancestral", c.diffusion.ancestral}};
    j["learner"] = {{"clip_len", c.learner.clip_len},
                    {"stride", c.learner.stride},
                    {"feature_dim", c.learner.feature_dim},
                    {"width", c.learner.width},
                    {"transformer_layers", c.learner.transformer_layers},
                    {"heads", c.learner.heads},
                    {"frame_policy", c.learner.frame_policy}};
    j["rules"] = {{"enabled", c.rules_enabled},
                  {"lambda_temp", c.rules.lambda_temp},
                  {"lambda_sep", c.rules.lambda_sep},
                  {"lambda_align", c.rules.lambda_align},
                  {"margin", c.rules.margin},
                  {"sep_sign", rules::sep_sign_name(c.rules.sep_sign)}};
    j["ddp"] = {{"enabled", c.ddp.enabled}, {"mil_topk_frac", c.ddp.mil_topk_frac}};
    j["train"] = {{"batch_size", c.train.batch_size},
                  {"lr", c.train.lr},
                  {"weight_decay", c.train.weight_decay},
                  {"schedule", c.train.schedule},
                  {"cg_iters", c.train.cg_iters},
                  {"joint_iters", c.train.joint_iters},
                  {"seed", c.train.seed},
                  {"log_every", c.train.log_every}};
    j["eval"] = {{"threshold", c.eval.threshold}, {"folds", c.eval.folds}};
    j["data"] = {{"train_cases", c.data.train_cases},
                 {"eval_cases", c.data.eval_cases},
                 {"key_stage_t", c.data.key_stage_t},
                 {"key_stage_t1", c.data.key_stage_t1}};
    return j;
}

void config_from_json(const json& j, ExperimentConfig& c) {
    if (j.contains("mode")) c.mode = mode_from_name(j["mode"].get<std::string>());
    if (j.contains("world")) world_from_json(j["world"], c.world);
    if (j.contains("anomaly")) anomaly_from_json(j["anomaly"], c.anomaly);
    if (j.contains("diffusion")) {
        const auto& d = j["diffusion"];
        c.diffusion.steps = d.value("steps", c.diffusion.steps);
        c.diffusion.beta_start = d.value("beta_start", c.diffusion.beta_start);
        c.diffusion.beta_end = d.value("beta_end", c.diffusion.beta_end);
        c.diffusion.base_width = d.value("base_width", c.diffusion.base_width);
        c.diffusion.emb_dim = d.value("emb_dim", c.diffusion.emb_dim);
        c.diffusion.ancestral = d.value("ancestral", c.diffusion.ancestral);
    }
    if (j.contains("learner")) {
        const auto& l = j["learner"];
        c.learner.clip_len = l.value("clip_len", c.learner.clip_len);
        c.learner.stride = l.value("stride", c.learner.stride);
        c.learner.feature_dim = l.value("feature_dim", c.learner.feature_dim);
        c.learner.width = l.value("width", c.learner.width);
        c.learner.transformer_layers = l.value("transformer_layers", c.learner.transformer_layers);
        c.learner.heads = l.value("heads", c.learner.heads);
        c.learner.frame_policy = l.value("frame_policy", c.learner.frame_policy);
    }
    if (j.contains("rules")) {
        const auto& r = j["rules"];
        c.rules_enabled = r.value("enabled", c.rules_enabled);
        c.rules.lambda_temp = r.value("lambda_temp", c.rules.lambda_temp);
        c.rules.lambda_sep = r.value("lambda_sep", c.rules.lambda_sep);
        c.rules.lambda_align = r.value("lambda_align", c.rules.lambda_align);
        c.rules.margin = r.value("margin", c.rules.margin);
        if (r.contains("sep_sign"))
            c.rules.sep_sign = rules::sep_sign_from_name(r["sep_sign"].get<std::string>());
    }
    if (j.contains("ddp")) {
        c.ddp.enabled = j["ddp"].value("enabled", c.ddp.enabled);
        c.ddp.mil_topk_frac = j["ddp"].value("mil_topk_frac", c.ddp.mil_topk_frac);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        c.train.batch_size = t.value("batch_size", c.train.batch_size);
        c.train.lr = t.value("lr", c.train.lr);
        c.train.weight_decay = t.value("weight_decay", c.train.weight_decay);
        c.train.schedule = t.value("schedule", c.train.schedule);
        c.train.cg_iters = t.value("cg_iters", c.train.cg_iters);
        c.train.joint_iters = t.value("joint_iters", c.train.joint_iters);
        c.train.seed = t.value("seed", c.train.seed);
        c.train.log_every = t.value("log_every", c.train.log_every);
    }
    if (j.contains("eval")) {
        c.eval.threshold = j["eval"].value("threshold", c.eval.threshold);
        c.eval.folds = j["eval"].value("folds", c.eval.folds);
    }
    if (j.contains("data")) {
        const auto& d = j["data"];
        c.data.train_cases = d.value("train_cases", c.data.train_cases);
        c.data.eval_cases = d.value("eval_cases", c.data.eval_cases);
        c.data.key_stage_t = d.value("key_stage_t", c.data.key_stage_t);
        c.data.key_stage_t1 = d.value("key_stage_t1", c.data.key_stage_t1);
    }
}

}  // namespace

std::string ExperimentConfig::to_json() const { return config_to_json(*this).dump(2); }

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c;
    try {
        config_from_json(j, c);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

void ExperimentConfig::apply_env_overrides() {
    json j = config_to_json(*this);
    const std::string prefix = "CVDX_";
    for (char** env = environ; *env; ++env) {
        std::string entry(*env);
        if (entry.rfind(prefix, 0) != 0) continue;
        auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string key = entry.substr(prefix.size(), eq - prefix.size());
        std::string value = entry.substr(eq + 1);
        // CVDX_train__lr -> ["train","lr"]
        std::vector<std::string> parts;
        size_t pos = 0;
        while (true) {
            auto sep = key.find("__", pos);
            if (sep == std::string::npos) {
                parts.push_back(key.substr(pos));
                break;
            }
            parts.push_back(key.substr(pos, sep - pos));
            pos = sep + 2;
        }
        json* node = &j;
        bool ok = true;
        for (size_t i = 0; i + 1 < parts.size(); ++i) {
            if (!node->contains(parts[i])) {
                ok = false;
                break;
            }
            node = &(*node)[parts[i]];
        }
        if (!ok || !node->contains(parts.back())) continue;  // unknown key: ignore
        json& slot = (*node)[parts.back()];
        try {
            if (slot.is_boolean())
                slot = (value == "1" || value == "true" || value == "on");
            else if (slot.is_number_integer())
                slot = static_cast<int64_t>(std::stoll(value));
            else if (slot.is_number_unsigned())
                slot = static_cast<uint64_t>(std::stoull(value));
            else if (slot.is_number_float())
                slot = std::stod(value);
            else
                slot = value;
        } catch (const std::exception&) {
            throw ConfigError("env override " + entry.substr(0, eq) + " has invalid value");
        }
    }
    config_from_json(j, *this);
}

uint64_t ExperimentConfig::content_hash() const {
    std::string s = config_to_json(*this).dump();
    return fnv1a64(s.data(), s.size());
}

std::string ExperimentConfig::content_hash_hex() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(content_hash()));
    return buf;
}

}  // namespace cvdx::harness
