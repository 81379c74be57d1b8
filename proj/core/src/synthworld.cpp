#include "cvdx/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cvdx/errors.hpp"
#include "cvdx/rng.hpp"

namespace cvdx::world {

namespace {

// site-marker channel factors: candidate sites carry a mild, health-neutral
// discoloration at every stage, so lesion positions are observable without
// leaking the health state
constexpr double kMarkerGain[3] = {-0.08, 0.06, 0.10};
constexpr double kMarkerAmp = 1.0;
constexpr double kBlobSigmaFrac = 0.042;   // lesion blob width, fraction of image size
constexpr double kBlobRadiusFrac = 0.66;   // blob center radius, fraction of disk radius
constexpr double kDiskRadiusFrac = 0.47;
constexpr double kTexLo = 0.25, kTexHi = 0.75;

struct Geometry {
    double cx, cy, disk_r, blob_r, sigma;
    explicit Geometry(int n)
        : cx((n - 1) * 0.5),
          cy((n - 1) * 0.5),
          disk_r(kDiskRadiusFrac * n),
          blob_r(kBlobRadiusFrac * kDiskRadiusFrac * n),
          sigma(kBlobSigmaFrac * n) {}

    bool inside(int y, int x) const {
        double dy = y - cy, dx = x - cx;
        return dy * dy + dx * dx <= disk_r * disk_r;
    }
    int sector(int y, int x, int num_positions) const {
        double a = std::atan2(y - cy, x - cx);  // [-pi, pi]
        if (a < 0) a += 2.0 * 3.14159265358979323846;
        int s = static_cast<int>(a / (2.0 * 3.14159265358979323846) * num_positions);
        return std::min(s, num_positions - 1);
    }
    double blob(int position, int num_positions, int y, int x) const {
        double ang = (position + 0.5) * 2.0 * 3.14159265358979323846 / num_positions;
        double bx = cx + blob_r * std::cos(ang);
        double by = cy + blob_r * std::sin(ang);
        double d2 = (x - bx) * (x - bx) + (y - by) * (y - by);
        return std::exp(-d2 / (2.0 * sigma * sigma));
    }
};

// smooth low-frequency random field in [lo,hi], one [H,W] plane
Tensor smooth_field(int n, Rng& rng, double lo, double hi) {
    struct Wave {
        double kx, ky, phase, amp;
    };
    std::vector<Wave> waves(4);
    for (auto& w : waves) {
        w.kx = rng.uniform(0.15, 0.65);
        w.ky = rng.uniform(0.15, 0.65);
        w.phase = rng.uniform(0.0, 6.283185307179586);
        w.amp = rng.uniform(0.04, 0.09);
    }
    Tensor f({n, n});
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double v = 0.5;
            for (const auto& w : waves) v += w.amp * std::cos(w.kx * x + w.ky * y + w.phase);
            v += rng.uniform(-0.03, 0.03);
            f.at2(y, x) = std::clamp(lo + (hi - lo) * std::clamp(v, 0.0, 1.0), lo, hi);
        }
    return f;
}

// shader-style deterministic pseudo-noise in [-1,1] from a texture value
double rough_noise(double tex, int y, int x) {
    double s = std::sin(tex * 12.9898 + y * 78.233 + x * 37.719) * 43758.5453;
    return 2.0 * (s - std::floor(s)) - 1.0;
}

// integer translation with zero fill, [C,H,W]
Tensor translate(const Tensor& img, int dx, int dy) {
    if (dx == 0 && dy == 0) return img;
    const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
    Tensor out({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y) {
            int sy = y - dy;
            if (sy < 0 || sy >= h) continue;
            for (int x = 0; x < w; ++x) {
                int sx = x - dx;
                if (sx < 0 || sx >= w) continue;
                out.at3(ch, y, x) = img.at3(ch, sy, sx);
            }
        }
    return out;
}

NuisanceSample sample_nuisance(const NuisanceConfig& nc, Rng& rng) {
    NuisanceSample s;
    s.brightness = rng.uniform(1.0 - nc.illumination_range, 1.0 + nc.illumination_range);
    s.dx = nc.translation_range_px > 0
               ? rng.uniform_int(-nc.translation_range_px, nc.translation_range_px)
               : 0;
    s.dy = nc.translation_range_px > 0
               ? rng.uniform_int(-nc.translation_range_px, nc.translation_range_px)
               : 0;
    for (int c = 0; c < 3; ++c)
        s.channel_gain[c] = rng.uniform(1.0 - nc.color_jitter_range, 1.0 + nc.color_jitter_range);
    if (nc.glare_prob > 0.0 && rng.uniform() < nc.glare_prob) {
        s.glare_amp = nc.glare_amp * rng.uniform(0.7, 1.3);
        double ang = rng.uniform(0.0, 6.283185307179586);
        double rad = rng.uniform(0.0, 0.8);
        s.glare_x = 0.5 + 0.47 * rad * std::cos(ang);  // fraction of image size
        s.glare_y = 0.5 + 0.47 * rad * std::sin(ang);
        s.glare_sigma = rng.uniform(0.06, 0.12);  // fraction of image size
    }
    return s;
}

// malignant lesion response ramps in over the later stages; the two earliest
// stages carry no lesion response, so next-stage brightening is predictable
// only through the health condition
double lesion_response_frac(int stage, int num_stages) {
    if (num_stages <= 2) return stage == num_stages - 1 ? 1.0 : 0.0;
    if (stage <= 1) return 0.0;
    return static_cast<double>(stage - 1) / (num_stages - 2);
}

double uniform_response_frac(int stage, int num_stages) {
    if (num_stages <= 1) return 0.0;
    return static_cast<double>(stage) / (num_stages - 1);
}

std::string case_id_from_seed(uint64_t seed) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "c%016llx", static_cast<unsigned long long>(seed));
    return buf;
}

}  // namespace

Health health_from_name(const std::string& s) {
    if (s == "benign") return Health::benign;
    if (s == "malignant") return Health::malignant;
    throw ValueError("unknown health name: " + s);
}

void WorldConfig::validate() const {
    if (image_size < 8) throw ConfigError("world.image_size must be >= 8");
    if (channels < 1 || channels > 3) throw ConfigError("world.channels must be in [1,3]");
    if (num_stages < 2) throw ConfigError("world.num_stages must be >= 2");
    if (frames_per_stage < 1) throw ConfigError("world.frames_per_stage must be >= 1");
    if (num_positions < 2) throw ConfigError("world.num_positions must be >= 2");
    if (lesion_count_min < 1 || lesion_count_max < lesion_count_min ||
        lesion_count_max > num_positions)
        throw ConfigError("world.lesion_count_range is invalid");
    if (!(response.malignant_mean > response.benign_mean))
        throw ConfigError("world.response.malignant_mean must exceed benign_mean");
    if (response.benign_mean < 0 || response.std < 0)
        throw ConfigError("world.response strengths must be non-negative");
    if (nuisance.illumination_range < 0 || nuisance.illumination_range >= 1)
        throw ConfigError("world.nuisance.illumination_range must be in [0,1)");
    if (nuisance.translation_range_px < 0)
        throw ConfigError("world.nuisance.translation_range_px must be >= 0");
    if (nuisance.color_jitter_range < 0 || nuisance.color_jitter_range >= 1)
        throw ConfigError("world.nuisance.color_jitter_range must be in [0,1)");
    if (nuisance.glare_prob < 0 || nuisance.glare_prob > 1)
        throw ConfigError("world.nuisance.glare_prob must be in [0,1]");
    if (nuisance.glare_amp < 0) throw ConfigError("world.nuisance.glare_amp must be >= 0");
    if (force_positions) {
        for (int p : *force_positions)
            if (p < 0 || p >= num_positions) throw ConfigError("world.force_positions out of range");
    }
}

Tensor VideoRecord::frame(int t) const {
    Tensor out({channels, image_size, image_size});
    const int64_t n = frame_numel();
    const float* src = frames.data() + static_cast<int64_t>(t) * n;
    for (int64_t i = 0; i < n; ++i) out[i] = static_cast<double>(src[i]);
    return out;
}

bool VideoRecord::operator==(const VideoRecord& o) const {
    auto nuis_eq = [](const NuisanceSample& a, const NuisanceSample& b) {
        return a.brightness == b.brightness && a.dx == b.dx && a.dy == b.dy &&
               a.channel_gain == b.channel_gain && a.glare_amp == b.glare_amp &&
               a.glare_x == b.glare_x && a.glare_y == b.glare_y &&
               a.glare_sigma == b.glare_sigma;
    };
    if (!(frames == o.frames && stage_ids == o.stage_ids && health == o.health &&
          labels == o.labels && case_id == o.case_id && seed == o.seed &&
          image_size == o.image_size && channels == o.channels &&
          nuisance_trace.size() == o.nuisance_trace.size()))
        return false;
    for (size_t i = 0; i < nuisance_trace.size(); ++i)
        if (!nuis_eq(nuisance_trace[i], o.nuisance_trace[i])) return false;
    return true;
}

TissueState tissue_from_seed(const WorldConfig& config, uint64_t seed, Health health) {
    const int n = config.image_size;
    Geometry geo(n);

    Rng tissue_rng(derive_seed(seed, 1));
    TissueState state;
    state.health = health;

    // texture planes: one shared field, per-channel gain
    Tensor tex = smooth_field(n, tissue_rng, kTexLo, kTexHi);
    std::array<double, 3> chan_gain{};
    for (int c = 0; c < 3; ++c) chan_gain[c] = tissue_rng.uniform(0.80, 0.98);

    // candidate sites (health-independent)
    int count = tissue_rng.uniform_int(config.lesion_count_min, config.lesion_count_max);
    std::vector<int> all(config.num_positions);
    for (int i = 0; i < config.num_positions; ++i) all[i] = i;
    for (int i = config.num_positions - 1; i > 0; --i)
        std::swap(all[i], all[tissue_rng.uniform_int(0, i)]);
    state.candidates.assign(all.begin(), all.begin() + count);
    std::sort(state.candidates.begin(), state.candidates.end());
    if (config.force_positions) state.candidates = *config.force_positions;

    // severities from a health-keyed stream so the oracle re-render can flip
    // them deterministically
    Rng sev_rng(derive_seed(seed, health == Health::malignant ? 3 : 2));
    state.severity.assign(config.num_positions, 0.0);
    bool first = true;
    for (int pos : state.candidates) {
        double s;
        if (health == Health::malignant) {
            // guarantee at least one lesion; the rest may stay sub-threshold
            bool lesion = first || sev_rng.uniform() < 0.7;
            s = lesion ? sev_rng.uniform(0.62, 0.95) : sev_rng.uniform(0.08, 0.42);
        } else {
            s = sev_rng.uniform(0.08, 0.42);
        }
        state.severity[pos] = s;
        first = false;
    }

    // bake markers into the texture
    state.base_texture = Tensor({config.channels, n, n});
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            if (!geo.inside(y, x)) continue;
            double marker = 0.0;
            double mk[3] = {0, 0, 0};
            for (int pos : state.candidates) {
                double b = geo.blob(pos, config.num_positions, y, x);
                marker += b;
                for (int c = 0; c < 3; ++c) mk[c] += kMarkerGain[c] * b;
            }
            (void)marker;
            for (int c = 0; c < config.channels; ++c) {
                double v = tex.at2(y, x) * chan_gain[c] * (1.0 + kMarkerAmp * mk[c]);
                state.base_texture.at3(c, y, x) = std::clamp(v, 0.0, 1.0);
            }
        }
    return state;
}

Tensor render_frame(const TissueState& state, int stage, const NuisanceSample& nuisance,
                    const WorldConfig& config) {
    if (stage < 0 || stage >= config.num_stages)
        throw ValueError("render_frame: stage out of range");
    const int n = config.image_size;
    Geometry geo(n);
    const double u = config.response.benign_mean * uniform_response_frac(stage, config.num_stages);
    const double resp = lesion_response_frac(stage, config.num_stages);

    Tensor img({config.channels, n, n});
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            if (!geo.inside(y, x)) continue;
            double blob_sum = 0.0;
            if (state.health == Health::malignant && resp > 0.0) {
                for (int pos : state.candidates) {
                    double s = state.severity[pos];
                    if (s >= kLesionThreshold)
                        blob_sum += s * geo.blob(pos, config.num_positions, y, x);
                }
            }
            for (int c = 0; c < config.channels; ++c) {
                double v = state.base_texture.at3(c, y, x) * (1.0 + u);
                if (blob_sum > 0.0) {
                    // lesion response in normalized intensity units, with a
                    // roughness term modulating the response itself
                    double add = config.response.malignant_mean * resp * blob_sum;
                    add *= 1.0 + config.response.std *
                                     rough_noise(state.base_texture.at3(c, y, x), y, x);
                    v += add;
                }
                if (nuisance.glare_amp > 0.0) {
                    double gx = nuisance.glare_x * n, gy = nuisance.glare_y * n;
                    double gs = nuisance.glare_sigma * n;
                    double d2 = (x - gx) * (x - gx) + (y - gy) * (y - gy);
                    v += nuisance.glare_amp * std::exp(-d2 / (2.0 * gs * gs));
                }
                v *= nuisance.brightness * nuisance.channel_gain[c];
                img.at3(c, y, x) = std::clamp(v, 0.0, 1.0);
            }
        }
    return translate(img, nuisance.dx, nuisance.dy);
}

VideoRecord generate_case(const WorldConfig& config, uint64_t seed) {
    config.validate();
    Health health;
    if (config.force_health) {
        health = *config.force_health;
    } else {
        health = (splitmix64(seed ^ 0xa5a5a5a5a5a5a5a5ULL) & 1) ? Health::malignant
                                                                : Health::benign;
    }
    TissueState state = tissue_from_seed(config, seed, health);

    VideoRecord rec;
    rec.seed = seed;
    rec.case_id = case_id_from_seed(seed);
    rec.health = health;
    rec.image_size = config.image_size;
    rec.channels = config.channels;
    rec.labels.assign(config.num_positions, 0);
    for (int p = 0; p < config.num_positions; ++p)
        if (state.severity[p] >= kLesionThreshold) rec.labels[p] = 1;

    Rng nuis_rng(derive_seed(seed, 4));
    const int total = config.frames_total();
    rec.frames.resize(static_cast<size_t>(total) * config.channels * config.image_size *
                      config.image_size);
    rec.stage_ids.resize(total);
    rec.nuisance_trace.resize(total);
    for (int t = 0; t < total; ++t) {
        int stage = t / config.frames_per_stage;
        rec.stage_ids[t] = stage;
        rec.nuisance_trace[t] = sample_nuisance(config.nuisance, nuis_rng);
        Tensor img = render_frame(state, stage, rec.nuisance_trace[t], config);
        float* dst = rec.frames.data() + static_cast<int64_t>(t) * rec.frame_numel();
        for (int64_t i = 0; i < img.numel(); ++i) dst[i] = static_cast<float>(img[i]);
    }
    return rec;
}

VideoRecord oracle_counterfactual(const VideoRecord& record, Health target_health,
                                  const WorldConfig& config) {
    if (record.nuisance_trace.size() != static_cast<size_t>(record.frames_total()) ||
        record.case_id.empty())
        throw ValueError("oracle_counterfactual: record lacks seed/nuisance_trace");
    if (target_health == record.health) return record;

    TissueState state = tissue_from_seed(config, record.seed, target_health);
    VideoRecord out = record;
    out.health = target_health;
    for (int p = 0; p < config.num_positions; ++p)
        out.labels[p] = state.severity[p] >= kLesionThreshold ? 1 : 0;
    for (int t = 0; t < record.frames_total(); ++t) {
        Tensor img = render_frame(state, record.stage_ids[t], record.nuisance_trace[t], config);
        float* dst = out.frames.data() + static_cast<int64_t>(t) * out.frame_numel();
        for (int64_t i = 0; i < img.numel(); ++i) dst[i] = static_cast<float>(img[i]);
    }
    return out;
}

Tensor sector_mask(const WorldConfig& config, const std::vector<int>& positions, int dx, int dy) {
    const int n = config.image_size;
    Geometry geo(n);
    Tensor mask({n, n});
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            int sy = y - dy, sx = x - dx;
            if (sy < 0 || sy >= n || sx < 0 || sx >= n) continue;
            if (!geo.inside(sy, sx)) continue;
            int s = geo.sector(sy, sx, config.num_positions);
            for (int p : positions)
                if (p == s) {
                    mask.at2(y, x) = 1.0;
                    break;
                }
        }
    return mask;
}

uint64_t case_seed(const WorldConfig& config, int case_index) {
    return derive_seed(config.seed, static_cast<uint64_t>(case_index));
}

std::vector<VideoRecord> make_dataset(const WorldConfig& config, int count) {
    std::vector<VideoRecord> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        WorldConfig c = config;
        c.force_health = (i % 2 == 0) ? Health::benign : Health::malignant;
        out.push_back(generate_case(c, case_seed(config, i)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// anomaly world
// ---------------------------------------------------------------------------

void AnomalyConfig::validate() const {
    if (image_size < 8) throw ConfigError("anomaly.image_size must be >= 8");
    if (channels < 1 || channels > 3) throw ConfigError("anomaly.channels must be in [1,3]");
    if (num_snippets < 1) throw ConfigError("anomaly.num_snippets must be >= 1");
    if (snippet_len < 1) throw ConfigError("anomaly.snippet_len must be >= 1");
    if (event_count_min < 1 || event_count_max < event_count_min)
        throw ConfigError("anomaly.event_count range is invalid");
    if (event_len_min < 1 || event_len_max < event_len_min ||
        event_len_max > frames_total())
        throw ConfigError("anomaly.event_len range is invalid");
    if (event_strength <= 0) throw ConfigError("anomaly.event_strength must be > 0");
}

namespace {
struct AnomalyEvent {
    int start, len;
    double bx, by, sigma;
};

std::vector<AnomalyEvent> sample_events(const AnomalyConfig& cfg, Rng& rng, bool anomalous) {
    std::vector<AnomalyEvent> events;
    if (!anomalous) return events;
    int count = rng.uniform_int(cfg.event_count_min, cfg.event_count_max);
    Geometry geo(cfg.image_size);
    for (int e = 0; e < count; ++e) {
        AnomalyEvent ev;
        ev.len = rng.uniform_int(cfg.event_len_min, cfg.event_len_max);
        ev.start = rng.uniform_int(0, cfg.frames_total() - ev.len);
        double ang = rng.uniform(0.0, 6.283185307179586);
        double rad = rng.uniform(0.1, 0.7) * geo.disk_r;
        ev.bx = geo.cx + rad * std::cos(ang);
        ev.by = geo.cy + rad * std::sin(ang);
        ev.sigma = cfg.image_size * rng.uniform(0.10, 0.16);
        events.push_back(ev);
    }
    return events;
}
}  // namespace

VideoRecord generate_anomaly_case(const AnomalyConfig& cfg, uint64_t seed, bool anomalous) {
    cfg.validate();
    const int n = cfg.image_size;
    Geometry geo(n);

    Rng tissue_rng(derive_seed(seed, 11));
    Tensor tex = smooth_field(n, tissue_rng, kTexLo, kTexHi);
    std::array<double, 3> chan_gain{};
    for (int c = 0; c < 3; ++c) chan_gain[c] = tissue_rng.uniform(0.80, 0.98);

    Rng event_rng(derive_seed(seed, 12));
    auto events = sample_events(cfg, event_rng, anomalous);

    VideoRecord rec;
    rec.seed = seed;
    rec.case_id = case_id_from_seed(seed);
    rec.health = anomalous ? Health::malignant : Health::benign;
    rec.labels.assign(1, anomalous ? 1 : 0);
    rec.image_size = n;
    rec.channels = cfg.channels;

    const int total = cfg.frames_total();
    rec.stage_ids.assign(total, 0);
    rec.nuisance_trace.resize(total);
    rec.frames.resize(static_cast<size_t>(total) * cfg.channels * n * n);

    NuisanceConfig nc;
    nc.illumination_range = cfg.illumination_range;
    nc.translation_range_px = cfg.translation_range_px;
    nc.color_jitter_range = 0.0;
    Rng nuis_rng(derive_seed(seed, 13));

    Tensor img({cfg.channels, n, n});
    for (int t = 0; t < total; ++t) {
        rec.nuisance_trace[t] = sample_nuisance(nc, nuis_rng);
        const auto& nu = rec.nuisance_trace[t];
        img.zero();
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                if (!geo.inside(y, x)) continue;
                double boost = 0.0;
                for (const auto& ev : events) {
                    if (t < ev.start || t >= ev.start + ev.len) continue;
                    double d2 = (x - ev.bx) * (x - ev.bx) + (y - ev.by) * (y - ev.by);
                    boost += cfg.event_strength * std::exp(-d2 / (2.0 * ev.sigma * ev.sigma));
                }
                for (int c = 0; c < cfg.channels; ++c) {
                    double v = tex.at2(y, x) * chan_gain[c] * (1.0 + boost);
                    v *= nu.brightness;
                    img.at3(c, y, x) = std::clamp(v, 0.0, 1.0);
                }
            }
        Tensor shifted = translate(img, nu.dx, nu.dy);
        float* dst = rec.frames.data() + static_cast<int64_t>(t) * rec.frame_numel();
        for (int64_t i = 0; i < shifted.numel(); ++i) dst[i] = static_cast<float>(shifted[i]);
    }
    return rec;
}

std::vector<uint8_t> anomaly_frame_flags(const AnomalyConfig& cfg, uint64_t seed, bool anomalous) {
    Rng event_rng(derive_seed(seed, 12));
    auto events = sample_events(cfg, event_rng, anomalous);
    std::vector<uint8_t> flags(cfg.frames_total(), 0);
    for (const auto& ev : events)
        for (int t = ev.start; t < ev.start + ev.len; ++t) flags[t] = 1;
    return flags;
}

// ---------------------------------------------------------------------------
// static-pair world
// ---------------------------------------------------------------------------

PairCase generate_pair_case(const WorldConfig& config, uint64_t seed) {
    const int n = config.image_size;
    Geometry geo(n);
    Rng rng(derive_seed(seed, 21));
    Tensor tex = smooth_field(n, rng, kTexLo, kTexHi);
    std::array<double, 3> chan_gain{};
    for (int c = 0; c < 3; ++c) chan_gain[c] = rng.uniform(0.80, 0.98);

    // at most one side carries a lesion
    double u = rng.uniform();
    int lesion_side = u < 0.5 ? -1 : (u < 0.75 ? 0 : 1);
    double ang = rng.uniform(0.0, 6.283185307179586);
    double rad = rng.uniform(0.15, 0.7) * geo.disk_r;
    double bx = geo.cx + rad * std::cos(ang);
    double by = geo.cy + rad * std::sin(ang);
    double sigma = n * rng.uniform(0.10, 0.15);
    double strength = rng.uniform(0.45, 0.75);

    NuisanceConfig nc = config.nuisance;
    PairCase pc;
    pc.seed = seed;
    pc.left_malignant = lesion_side == 0;
    pc.right_malignant = lesion_side == 1;

    for (int side = 0; side < 2; ++side) {
        NuisanceSample nu = sample_nuisance(nc, rng);
        Tensor img({config.channels, n, n});
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                int tx = side == 0 ? x : n - 1 - x;  // mirrored texture
                if (!geo.inside(y, tx)) continue;
                double boost = 0.0;
                if (lesion_side == side) {
                    double px = side == 0 ? bx : n - 1 - bx;
                    double d2 = (x - px) * (x - px) + (y - by) * (y - by);
                    boost = strength * std::exp(-d2 / (2.0 * sigma * sigma));
                }
                for (int c = 0; c < config.channels; ++c) {
                    double v = tex.at2(y, tx) * chan_gain[c] * (1.0 + boost);
                    v *= nu.brightness * nu.channel_gain[c];
                    img.at3(c, y, x) = std::clamp(v, 0.0, 1.0);
                }
            }
        Tensor shifted = translate(img, nu.dx, nu.dy);
        if (side == 0)
            pc.left = std::move(shifted);
        else
            pc.right = std::move(shifted);
    }
    return pc;
}

}  // namespace cvdx::world
