#include "mintime/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "mintime/errors.hpp"
#include "mintime/parallel.hpp"
#include "mintime/rng.hpp"
#include "mintime/tensor.hpp"

namespace mintime {

namespace fs = std::filesystem;

AnomalyKind parse_anomaly(const std::string& s) {
  if (s == "texture_patch") return AnomalyKind::texture_patch;
  if (s == "temporal_jitter") return AnomalyKind::temporal_jitter;
  throw ConfigError("unknown anomaly kind '" + s + "'");
}

const char* anomaly_name(AnomalyKind k) {
  return k == AnomalyKind::texture_patch ? "texture_patch" : "temporal_jitter";
}

void SynthConfig::validate() const {
  if (num_videos < 1) throw ConfigError("synth.num_videos must be >= 1");
  if (frames < 1) throw ConfigError("synth.frames must be >= 1");
  if (identities_min < 1 || identities_max < identities_min || identities_max > 3)
    throw ConfigError("synth.identities must lie in [1, 3]");
  if (fake_fraction < 0.0 || fake_fraction > 1.0)
    throw ConfigError("synth.fake_fraction must lie in [0, 1]");
  if (!(face_frac_min > 0.0) || face_frac_max > 1.0 || face_frac_max < face_frac_min)
    throw ConfigError("synth face fractions must satisfy 0 < min <= max <= 1");
  if (strength < 0.0) throw ConfigError("synth.strength must be >= 0");
  if (crop_size < 4) throw ConfigError("synth.crop_size must be >= 4");
  if (embedding_dim < identities_max)
    throw ConfigError("synth.embedding_dim must be >= identities per video");
  if (frame_width < 8 || frame_height < 8) throw ConfigError("synth frame size too small");
}

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

struct Grating {
  double fx, fy, omega, amp;
  double phase[3];
};

struct IdentityParams {
  double area_frac;
  double motion_phase_x, motion_phase_y, motion_speed_x, motion_speed_y;
  double size_phase;
  Grating gratings[2];
  double dc[3];
};

IdentityParams draw_identity(uint64_t seed, int video, int gen_id, const SynthConfig& cfg) {
  IdentityParams p{};
  Rng geom(derive_seed(seed, "geom", static_cast<uint64_t>(video), static_cast<uint64_t>(gen_id)));
  p.area_frac = geom.uniform(cfg.face_frac_min, cfg.face_frac_max);
  p.motion_phase_x = geom.uniform(0, kTau);
  p.motion_phase_y = geom.uniform(0, kTau);
  p.motion_speed_x = geom.uniform(0.1, 0.4);
  p.motion_speed_y = geom.uniform(0.1, 0.4);
  p.size_phase = geom.uniform(0, kTau);
  Rng tex(derive_seed(seed, "tex", static_cast<uint64_t>(video), static_cast<uint64_t>(gen_id)));
  const double amps[2] = {0.18, 0.12};
  for (int gi = 0; gi < 2; ++gi) {
    Grating& g = p.gratings[gi];
    g.fx = tex.uniform(2.0, 6.0);
    g.fy = tex.uniform(2.0, 6.0);
    g.omega = tex.uniform(0.3, 1.0);
    g.amp = amps[gi];
    for (int c = 0; c < 3; ++c) g.phase[c] = tex.uniform(0, kTau);
  }
  for (int c = 0; c < 3; ++c) p.dc[c] = tex.uniform(-0.08, 0.08);
  return p;
}

struct VideoPlan {
  int identity_count = 1;
  bool fake = false;
  int manipulated_gen_id = -1;  // generation-order id
  int span_begin = 0, span_end = 0;
  std::vector<IdentityParams> identities;
};

VideoPlan plan_video(uint64_t seed, int video, const SynthConfig& cfg) {
  VideoPlan plan;
  if (cfg.identities_max > cfg.identities_min) {
    Rng rng(derive_seed(seed, "identity_count", static_cast<uint64_t>(video)));
    plan.identity_count = cfg.identities_min +
                          static_cast<int>(rng.index(static_cast<uint64_t>(
                              cfg.identities_max - cfg.identities_min + 1)));
  } else {
    plan.identity_count = cfg.identities_min;
  }
  plan.fake = Rng(derive_seed(seed, "label", static_cast<uint64_t>(video))).uniform() <
              cfg.fake_fraction;
  if (plan.fake) {
    plan.manipulated_gen_id = static_cast<int>(
        Rng(derive_seed(seed, "manip", static_cast<uint64_t>(video)))
            .index(static_cast<uint64_t>(plan.identity_count)));
    Rng span(derive_seed(seed, "span", static_cast<uint64_t>(video)));
    const int len = std::max(1, cfg.frames / 2);
    plan.span_begin = static_cast<int>(span.index(static_cast<uint64_t>(cfg.frames - len + 1)));
    plan.span_end = plan.span_begin + len;
  }
  for (int g = 0; g < plan.identity_count; ++g)
    plan.identities.push_back(draw_identity(seed, video, g, cfg));
  return plan;
}

// Face box at frame t; kept fully inside the frame.
void face_box(const IdentityParams& p, int t, const SynthConfig& cfg, double out[4]) {
  const double frame_area = static_cast<double>(cfg.frame_width) * cfg.frame_height;
  double side = std::sqrt(p.area_frac * frame_area);
  side *= 1.0 + 0.08 * std::sin(kTau * t / static_cast<double>(cfg.frames) + p.size_phase);
  side = std::min(side, static_cast<double>(std::min(cfg.frame_width, cfg.frame_height)));
  const double cx = side / 2 + (cfg.frame_width - side) *
                                   (0.5 + 0.45 * std::sin(p.motion_phase_x + p.motion_speed_x * t));
  const double cy = side / 2 + (cfg.frame_height - side) *
                                   (0.5 + 0.45 * std::sin(p.motion_phase_y + p.motion_speed_y * t));
  out[0] = cx - side / 2;
  out[1] = cy - side / 2;
  out[2] = side;
  out[3] = side;
}

// Render one face crop (C x H x W, values in [0,1]) into `dst`.
void render_crop(float* dst, const VideoPlan& plan, int gen_id, int t, int video,
                 const SynthConfig& cfg) {
  const IdentityParams& p = plan.identities[static_cast<size_t>(gen_id)];
  const int s = cfg.crop_size;
  const bool manipulated = plan.fake && gen_id == plan.manipulated_gen_id &&
                           t >= plan.span_begin && t < plan.span_end;

  double jitter = 0.0;
  if (manipulated && cfg.anomaly == AnomalyKind::temporal_jitter) {
    Rng jr(derive_seed(cfg.seed, "jitter", static_cast<uint64_t>(video), static_cast<uint64_t>(t)));
    jitter = cfg.strength * jr.uniform(-3.14159265358979323846, 3.14159265358979323846);
  }

  int patch_x0 = 0, patch_y0 = 0, patch_side = 0;
  if (manipulated && cfg.anomaly == AnomalyKind::texture_patch) {
    Rng pr(derive_seed(cfg.seed, "patch", static_cast<uint64_t>(video)));
    patch_side = std::max(2, (s * 7) / 16);
    patch_x0 = static_cast<int>(pr.index(static_cast<uint64_t>(s - patch_side + 1)));
    patch_y0 = static_cast<int>(pr.index(static_cast<uint64_t>(s - patch_side + 1)));
  }

  Rng noise(derive_seed(cfg.seed, "noise", static_cast<uint64_t>(video),
                        static_cast<uint64_t>(gen_id), static_cast<uint64_t>(t)));
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const double u = static_cast<double>(x) / s;
        const double v = static_cast<double>(y) / s;
        double val = 0.5 + p.dc[c];
        for (const Grating& g : p.gratings)
          val += g.amp * std::sin(kTau * (g.fx * u + g.fy * v) + g.phase[c] +
                                  g.omega * t + jitter);
        val += noise.uniform(-0.02, 0.02);
        if (patch_side > 0 && x >= patch_x0 && x < patch_x0 + patch_side && y >= patch_y0 &&
            y < patch_y0 + patch_side) {
          const double checker = (((x / 2) + (y / 2)) & 1) ? 1.0 : -1.0;
          val += cfg.strength * 0.5 * checker;
        }
        val = std::clamp(val, 0.0, 1.0);
        dst[(c * s + y) * s + x] = static_cast<float>(val);
      }
    }
  }
}

std::vector<double> face_embedding(uint64_t seed, int video, int gen_id, int t,
                                   const SynthConfig& cfg) {
  Rng rng(derive_seed(seed, "embed", static_cast<uint64_t>(video),
                      static_cast<uint64_t>(gen_id), static_cast<uint64_t>(t)));
  std::vector<double> e(static_cast<size_t>(cfg.embedding_dim));
  for (auto& x : e) x = 0.1 * rng.uniform(-1, 1);
  e[static_cast<size_t>(gen_id)] += 1.0;
  double norm = 0.0;
  for (double x : e) norm += x * x;
  norm = std::sqrt(norm);
  for (auto& x : e) x /= norm;
  return e;
}

std::string video_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "v%06d", index);
  return buf;
}

}  // namespace

Manifest generate_dataset(const SynthConfig& cfg, const std::string& out_dir, int jobs) {
  cfg.validate();
  fs::create_directories(fs::path(out_dir) / "crops");

  std::vector<VideoRecord> videos(static_cast<size_t>(cfg.num_videos));
  std::vector<DetectionRecord> detections(static_cast<size_t>(cfg.num_videos));

  parallel_for(cfg.num_videos, resolve_jobs(jobs), [&](int64_t vi) {
    const int video = static_cast<int>(vi);
    const VideoPlan plan = plan_video(cfg.seed, video, cfg);
    const int k = plan.identity_count;

    // Enumerate identities by mean face area, largest first (generation
    // areas are constant per identity up to the bounded size wobble, so the
    // base fraction decides the order; ties keep generation order).
    std::vector<int> order(static_cast<size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return plan.identities[static_cast<size_t>(a)].area_frac >
             plan.identities[static_cast<size_t>(b)].area_frac;
    });

    VideoRecord rec;
    rec.video_id = video_name(video);
    rec.label = plan.fake ? Label::fake : Label::pristine;
    rec.anomaly_class = plan.fake ? anomaly_name(cfg.anomaly) : "pristine";

    const std::string pack_rel = "crops/" + rec.video_id + ".mnt";
    TensorF32 pack;
    pack.shape = {static_cast<int64_t>(k) * cfg.frames, 3, cfg.crop_size, cfg.crop_size};
    pack.data.resize(static_cast<size_t>(shape_numel(pack.shape)));
    const size_t crop_elems = static_cast<size_t>(3 * cfg.crop_size * cfg.crop_size);

    for (int rank = 0; rank < k; ++rank) {
      const int gen_id = order[static_cast<size_t>(rank)];
      if (plan.fake && gen_id == plan.manipulated_gen_id) rec.manipulated_identity = rank;
      IdentityTrack track;
      track.identity_id = rank;
      for (int t = 0; t < cfg.frames; ++t) {
        const size_t face_index = static_cast<size_t>(rank) * cfg.frames + t;
        render_crop(pack.data.data() + face_index * crop_elems, plan, gen_id, t, video, cfg);
        FaceRecord face;
        face.frame_index = t;
        face_box(plan.identities[static_cast<size_t>(gen_id)], t, cfg, face.bbox);
        face.frame_size[0] = cfg.frame_width;
        face.frame_size[1] = cfg.frame_height;
        face.embedding = face_embedding(cfg.seed, video, gen_id, t, cfg);
        face.feature_ref = pack_rel + "#" + std::to_string(face_index);
        track.faces.push_back(std::move(face));
      }
      rec.tracks.push_back(std::move(track));
    }
    save_tensor_file((fs::path(out_dir) / pack_rel).string(), pack);

    DetectionRecord det;
    det.video_id = rec.video_id;
    det.label = rec.label;
    det.manipulated_identity = rec.manipulated_identity;
    det.anomaly_class = rec.anomaly_class;
    for (int t = 0; t < cfg.frames; ++t)
      for (const auto& track : rec.tracks)
        det.faces.push_back(track.faces[static_cast<size_t>(t)]);

    videos[static_cast<size_t>(vi)] = std::move(rec);
    detections[static_cast<size_t>(vi)] = std::move(det);
  });

  Manifest manifest;
  manifest.embedding_dim = cfg.embedding_dim;
  manifest.videos = std::move(videos);
  save_manifest((fs::path(out_dir) / "manifest.jsonl").string(), manifest);

  DetectionManifest det_manifest;
  det_manifest.embedding_dim = cfg.embedding_dim;
  det_manifest.videos = std::move(detections);
  save_detections((fs::path(out_dir) / "detections.jsonl").string(), det_manifest);

  return manifest;
}

}  // namespace mintime
