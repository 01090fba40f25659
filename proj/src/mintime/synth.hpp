#pragma once

#include <cstdint>
#include <string>

#include "mintime/trackdata.hpp"

namespace mintime {

enum class AnomalyKind { texture_patch, temporal_jitter };

AnomalyKind parse_anomaly(const std::string& s);
const char* anomaly_name(AnomalyKind k);

// Procedural multi-identity benchmark. Every random stream is keyed by
// (seed, purpose, video, identity, frame), so a pristine identity renders
// byte-identically whether or not the video ends up labeled fake, and the
// whole dataset is fixed by the seed.
struct SynthConfig {
  int num_videos = 200;
  int frames = 24;
  int identities_min = 2;
  int identities_max = 2;
  double fake_fraction = 0.5;
  double face_frac_min = 0.02;
  double face_frac_max = 0.30;
  AnomalyKind anomaly = AnomalyKind::texture_patch;
  double strength = 0.8;
  int crop_size = 32;
  int embedding_dim = 8;
  int frame_width = 640;
  int frame_height = 360;
  uint64_t seed = 42;

  void validate() const;
};

// Writes <out_dir>/manifest.jsonl, <out_dir>/detections.jsonl and one crop
// pack per video under <out_dir>/crops/, then returns the track manifest.
Manifest generate_dataset(const SynthConfig& cfg, const std::string& out_dir, int jobs = 1);

}  // namespace mintime
