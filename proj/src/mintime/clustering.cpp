#include "mintime/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mintime/errors.hpp"

namespace mintime {

double similarity(const std::vector<double>& a, const std::vector<double>& b, Similarity kind) {
  if (a.size() != b.size())
    throw DataError("embedding dimension mismatch: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  double dot = 0.0;
  for (size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  if (kind == Similarity::dot) return dot;
  double na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DataError("cosine similarity of a zero embedding");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double bbox_overlap(const FaceRecord& a, const FaceRecord& b) {
  const double ax1 = a.bbox[0], ay1 = a.bbox[1];
  const double ax2 = ax1 + a.bbox[2], ay2 = ay1 + a.bbox[3];
  const double bx1 = b.bbox[0], by1 = b.bbox[1];
  const double bx2 = bx1 + b.bbox[2], by2 = by1 + b.bbox[3];
  const double iw = std::max(0.0, std::min(ax2, bx2) - std::max(ax1, bx1));
  const double ih = std::max(0.0, std::min(ay2, by2) - std::max(ay1, by1));
  const double inter = iw * ih;
  const double smaller = std::min(a.bbox[2] * a.bbox[3], b.bbox[2] * b.bbox[3]);
  return smaller <= 0 ? 0.0 : inter / smaller;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<size_t>(x)] != x) {
      parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
      x = parent[static_cast<size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

ClusterResult cluster_faces(const std::vector<FaceRecord>& faces, const ClusterConfig& cfg) {
  if (faces.empty()) throw DataError("cluster_faces: no faces");
  if (cfg.min_cluster_size < 1) throw ConfigError("min_cluster_size must be >= 1");
  const int n = static_cast<int>(faces.size());

  UnionFind uf(faces.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& fi = faces[static_cast<size_t>(i)];
      const auto& fj = faces[static_cast<size_t>(j)];
      if (cfg.same_frame_guard && fi.frame_index == fj.frame_index &&
          bbox_overlap(fi, fj) >= 0.5)
        continue;
      if (similarity(fi.embedding, fj.embedding, cfg.similarity) > cfg.threshold) uf.unite(i, j);
    }
  }

  // Collect components in order of their first member.
  std::vector<std::vector<int>> components;
  std::vector<int> comp_of(faces.size(), -1);
  for (int i = 0; i < n; ++i) {
    const int root = uf.find(i);
    if (comp_of[static_cast<size_t>(root)] < 0) {
      comp_of[static_cast<size_t>(root)] = static_cast<int>(components.size());
      components.emplace_back();
    }
    components[static_cast<size_t>(comp_of[static_cast<size_t>(root)])].push_back(i);
  }

  ClusterResult result;
  struct Candidate {
    std::vector<int> members;  // indices into faces, temporally ordered
    double mean_area = 0;
    int64_t first_frame = 0;
    int first_index = 0;
  };
  std::vector<Candidate> kept;
  for (auto& comp : components) {
    if (static_cast<int>(comp.size()) < cfg.min_cluster_size) {
      result.pruned_faces += static_cast<int64_t>(comp.size());
      continue;
    }
    Candidate c;
    c.members = comp;
    c.first_index = *std::min_element(comp.begin(), comp.end());
    std::sort(c.members.begin(), c.members.end(), [&](int a, int b) {
      const auto& fa = faces[static_cast<size_t>(a)];
      const auto& fb = faces[static_cast<size_t>(b)];
      if (fa.frame_index != fb.frame_index) return fa.frame_index < fb.frame_index;
      return a < b;
    });
    // Same-frame collisions inside one component are duplicate detections;
    // keep the largest box (then the earliest detection) per frame.
    std::vector<int> deduped;
    for (int idx : c.members) {
      if (!deduped.empty() &&
          faces[static_cast<size_t>(deduped.back())].frame_index ==
              faces[static_cast<size_t>(idx)].frame_index) {
        const auto& cur = faces[static_cast<size_t>(deduped.back())];
        const auto& cand = faces[static_cast<size_t>(idx)];
        if (cand.bbox[2] * cand.bbox[3] > cur.bbox[2] * cur.bbox[3]) deduped.back() = idx;
        ++result.pruned_faces;
        continue;
      }
      deduped.push_back(idx);
    }
    c.members = std::move(deduped);
    double area = 0.0;
    for (int idx : c.members) {
      const auto& f = faces[static_cast<size_t>(idx)];
      area += f.bbox[2] * f.bbox[3];
    }
    c.mean_area = area / static_cast<double>(c.members.size());
    c.first_frame = faces[static_cast<size_t>(c.members.front())].frame_index;
    kept.push_back(std::move(c));
  }

  if (kept.empty()) {
    result.all_pruned = true;
    return result;
  }

  // Enumerate by mean face area, largest first; ties break on earliest
  // appearance (first frame, then original detection order).
  std::stable_sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) {
    if (a.mean_area != b.mean_area) return a.mean_area > b.mean_area;
    if (a.first_frame != b.first_frame) return a.first_frame < b.first_frame;
    return a.first_index < b.first_index;
  });

  for (size_t rank = 0; rank < kept.size(); ++rank) {
    IdentityTrack track;
    track.identity_id = static_cast<int>(rank);
    for (int idx : kept[rank].members) track.faces.push_back(faces[static_cast<size_t>(idx)]);
    result.tracks.push_back(std::move(track));
  }
  return result;
}

}  // namespace mintime
