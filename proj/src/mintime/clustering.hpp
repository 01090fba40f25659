#pragma once

#include <string>
#include <vector>

#include "mintime/trackdata.hpp"

namespace mintime {

enum class Similarity { dot, cosine };

struct ClusterConfig {
  double threshold = 0.8;
  int min_cluster_size = 3;
  Similarity similarity = Similarity::cosine;
  // Extension knob, off by default: same-frame faces whose boxes overlap by
  // 50% or more (likely duplicate detections) are never connected directly.
  bool same_frame_guard = false;
};

// Dot product (or cosine) between two face embeddings.
double similarity(const std::vector<double>& a, const std::vector<double>& b,
                  Similarity kind = Similarity::dot);

// Intersection area over the smaller box area, in [0, 1].
double bbox_overlap(const FaceRecord& a, const FaceRecord& b);

struct ClusterResult {
  std::vector<IdentityTrack> tracks;
  int64_t pruned_faces = 0;
  bool all_pruned = false;  // every cluster fell below min_cluster_size
};

// Threshold-graph connected components over face embeddings. Surviving
// components become tracks sorted by frame, enumerated by mean face area
// from the largest (identity 0) to the smallest. Faces sharing a frame
// within one component are collapsed to the largest box so tracks keep
// strictly increasing frame indices.
ClusterResult cluster_faces(const std::vector<FaceRecord>& faces, const ClusterConfig& cfg);

}  // namespace mintime
