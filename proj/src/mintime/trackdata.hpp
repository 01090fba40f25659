#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mintime {

// One detected face. `embedding` is a precomputed feature vector;
// `feature_ref` points at the face crop tensor ("<pack>.mnt#<index>").
struct FaceRecord {
  int64_t frame_index = 0;
  double bbox[4] = {0, 0, 0, 0};  // x, y, w, h in pixels
  double frame_size[2] = {0, 0};  // W, H in pixels
  std::vector<double> embedding;
  std::string feature_ref;
};

// Bounding-box area over frame area, in (0, 1].
double area_ratio(const FaceRecord& face);

// Temporally ordered faces of one clustered identity.
struct IdentityTrack {
  int identity_id = 0;
  std::vector<FaceRecord> faces;

  double mean_face_area() const;  // pixels^2
  int64_t first_frame() const { return faces.empty() ? 0 : faces.front().frame_index; }
};

enum class Label { pristine, fake };

const char* label_name(Label l);
Label parse_label(const std::string& s);

struct VideoRecord {
  std::string video_id;
  Label label = Label::pristine;
  std::optional<int> manipulated_identity;
  std::string anomaly_class;  // optional; "" = derived from label
  std::vector<IdentityTrack> tracks;

  int64_t total_faces() const;
  const IdentityTrack* find_track(int identity_id) const;
};

// A video whose faces have not been clustered yet (cluster subcommand input).
struct DetectionRecord {
  std::string video_id;
  Label label = Label::pristine;
  std::optional<int> manipulated_identity;
  std::string anomaly_class;
  std::vector<FaceRecord> faces;
};

struct Manifest {
  int embedding_dim = 0;
  std::vector<VideoRecord> videos;
};

struct DetectionManifest {
  int embedding_dim = 0;
  std::vector<DetectionRecord> videos;
};

// JSON-lines manifest: a header object declaring the embedding dimensionality
// followed by one video object per line. Validation failures carry the line
// number and field.
Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& manifest);
DetectionManifest load_detections(const std::string& path);
void save_detections(const std::string& path, const DetectionManifest& manifest);

// Population statistics over the area ratios of every face, in percent.
struct RatioStats {
  double min = 0, max = 0, mean = 0, variance = 0;
  int64_t count = 0;
};

RatioStats ratio_stats(const Manifest& manifest);

}  // namespace mintime
