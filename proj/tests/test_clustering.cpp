#include <algorithm>
#include <set>

#include "doctest.h"
#include "mintime/clustering.hpp"
#include "mintime/errors.hpp"
#include "mintime/rng.hpp"

using namespace mintime;

namespace {

FaceRecord face_with(std::vector<double> embedding, int64_t frame, double w, double h,
                     double x = 0, double y = 0) {
  FaceRecord f;
  f.frame_index = frame;
  f.bbox[0] = x;
  f.bbox[1] = y;
  f.bbox[2] = w;
  f.bbox[3] = h;
  f.frame_size[0] = 640;
  f.frame_size[1] = 360;
  f.embedding = std::move(embedding);
  return f;
}

// Brute-force oracle: O(n^2) edges, BFS components, same pruning/dedup and
// enumeration rules, implemented independently of the union-find path.
std::vector<std::vector<int>> components_oracle(const std::vector<FaceRecord>& faces,
                                                const ClusterConfig& cfg) {
  const int n = static_cast<int>(faces.size());
  std::vector<std::vector<int>> adj(faces.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& a = faces[static_cast<size_t>(i)];
      const auto& b = faces[static_cast<size_t>(j)];
      if (cfg.same_frame_guard && a.frame_index == b.frame_index && bbox_overlap(a, b) >= 0.5)
        continue;
      if (similarity(a.embedding, b.embedding, cfg.similarity) > cfg.threshold)
        adj[static_cast<size_t>(i)].push_back(j);
    }
  std::vector<int> seen(faces.size(), 0);
  std::vector<std::vector<int>> comps;
  for (int s = 0; s < n; ++s) {
    if (seen[static_cast<size_t>(s)]) continue;
    std::vector<int> stack{s}, comp;
    seen[static_cast<size_t>(s)] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (int w : adj[static_cast<size_t>(v)])
        if (!seen[static_cast<size_t>(w)]) {
          seen[static_cast<size_t>(w)] = 1;
          stack.push_back(w);
        }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

std::vector<IdentityTrack> cluster_oracle(const std::vector<FaceRecord>& faces,
                                          const ClusterConfig& cfg) {
  struct Cand {
    std::vector<int> members;
    double mean_area;
    int64_t first_frame;
    int first_index;
  };
  std::vector<Cand> kept;
  for (auto& comp : components_oracle(faces, cfg)) {
    if (static_cast<int>(comp.size()) < cfg.min_cluster_size) continue;
    std::vector<int> order = comp;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return faces[static_cast<size_t>(a)].frame_index <
             faces[static_cast<size_t>(b)].frame_index;
    });
    // keep largest box per frame
    std::vector<int> dedup;
    size_t i = 0;
    while (i < order.size()) {
      size_t j = i;
      int best = order[i];
      while (j < order.size() && faces[static_cast<size_t>(order[j])].frame_index ==
                                     faces[static_cast<size_t>(order[i])].frame_index) {
        const auto& b = faces[static_cast<size_t>(order[j])];
        const auto& cur = faces[static_cast<size_t>(best)];
        if (b.bbox[2] * b.bbox[3] > cur.bbox[2] * cur.bbox[3]) best = order[j];
        ++j;
      }
      dedup.push_back(best);
      i = j;
    }
    Cand c;
    c.members = dedup;
    double area = 0;
    for (int idx : dedup) area += faces[static_cast<size_t>(idx)].bbox[2] *
                                  faces[static_cast<size_t>(idx)].bbox[3];
    c.mean_area = area / static_cast<double>(dedup.size());
    c.first_frame = faces[static_cast<size_t>(dedup.front())].frame_index;
    c.first_index = *std::min_element(comp.begin(), comp.end());
    kept.push_back(std::move(c));
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Cand& a, const Cand& b) {
    if (a.mean_area != b.mean_area) return a.mean_area > b.mean_area;
    if (a.first_frame != b.first_frame) return a.first_frame < b.first_frame;
    return a.first_index < b.first_index;
  });
  std::vector<IdentityTrack> tracks;
  for (size_t r = 0; r < kept.size(); ++r) {
    IdentityTrack t;
    t.identity_id = static_cast<int>(r);
    for (int idx : kept[r].members) t.faces.push_back(faces[static_cast<size_t>(idx)]);
    tracks.push_back(std::move(t));
  }
  return tracks;
}

bool same_tracks(const std::vector<IdentityTrack>& a, const std::vector<IdentityTrack>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].identity_id != b[i].identity_id) return false;
    if (a[i].faces.size() != b[i].faces.size()) return false;
    for (size_t f = 0; f < a[i].faces.size(); ++f) {
      if (a[i].faces[f].frame_index != b[i].faces[f].frame_index) return false;
      if (a[i].faces[f].embedding != b[i].faces[f].embedding) return false;
    }
  }
  return true;
}

std::vector<FaceRecord> random_instance(Rng& rng, int max_faces = 50) {
  const int groups = 1 + static_cast<int>(rng.index(4));
  const int n = 1 + static_cast<int>(rng.index(static_cast<uint64_t>(max_faces)));
  // near-orthogonal group directions in R^8 with small noise
  std::vector<std::vector<double>> dirs;
  for (int gi = 0; gi < groups; ++gi) {
    std::vector<double> d(8, 0.0);
    d[static_cast<size_t>(gi * 2)] = 1.0;
    dirs.push_back(d);
  }
  std::vector<FaceRecord> faces;
  for (int i = 0; i < n; ++i) {
    const int gi = static_cast<int>(rng.index(static_cast<uint64_t>(groups)));
    std::vector<double> e = dirs[static_cast<size_t>(gi)];
    for (auto& v : e) v += rng.uniform(-0.05, 0.05);
    const double w = rng.uniform(10, 200);
    const double h = rng.uniform(10, 200);
    faces.push_back(face_with(std::move(e), static_cast<int64_t>(rng.index(40)), w, h,
                              rng.uniform(0, 400), rng.uniform(0, 150)));
  }
  return faces;
}

}  // namespace

TEST_CASE("similarity examples") {
  CHECK(similarity({1, 0}, {0, 1}) == 0.0);
  CHECK(similarity({0.6, 0.8}, {0.6, 0.8}) == doctest::Approx(1.0));
  CHECK(similarity({0.6, 0.8}, {0.6, 0.8}, Similarity::cosine) == doctest::Approx(1.0));
  CHECK_THROWS_AS(similarity({1, 0}, {1, 0, 0}), DataError);

  Rng rng(3);
  for (int iter = 0; iter < 20; ++iter) {
    std::vector<double> a(6), b(6);
    for (auto& v : a) v = rng.uniform(-1, 1);
    for (auto& v : b) v = rng.uniform(-1, 1);
    double want = 0.0;
    for (size_t i = 0; i < a.size(); ++i) want += a[i] * b[i];
    CHECK(std::abs(similarity(a, b) - want) <= 1e-12);
  }
}

TEST_CASE("single face forms identity 0") {
  ClusterConfig cfg;
  cfg.min_cluster_size = 1;
  auto result = cluster_faces({face_with({1, 0}, 0, 50, 50)}, cfg);
  REQUIRE(result.tracks.size() == 1);
  CHECK(result.tracks[0].identity_id == 0);
  CHECK(result.tracks[0].faces.size() == 1);
}

TEST_CASE("two orthogonal groups split; larger mean area gets identity 0") {
  ClusterConfig cfg;
  cfg.threshold = 0.5;
  cfg.min_cluster_size = 1;
  cfg.similarity = Similarity::dot;
  std::vector<FaceRecord> faces;
  // group A: small faces along e0; group B: large faces along e1
  for (int i = 0; i < 3; ++i) faces.push_back(face_with({1, 0}, i, 20, 20));
  for (int i = 0; i < 3; ++i) faces.push_back(face_with({0, 1}, i, 90, 90));
  auto result = cluster_faces(faces, cfg);
  REQUIRE(result.tracks.size() == 2);
  CHECK(result.tracks[0].faces[0].embedding == std::vector<double>{0, 1});
  CHECK(result.tracks[1].faces[0].embedding == std::vector<double>{1, 0});
  CHECK(same_tracks(result.tracks, cluster_oracle(faces, cfg)));
}

TEST_CASE("transitive chain forms one component") {
  ClusterConfig cfg;
  cfg.threshold = 0.7;
  cfg.min_cluster_size = 1;
  cfg.similarity = Similarity::dot;
  // a~b and b~c above threshold, a·c below
  std::vector<FaceRecord> faces;
  faces.push_back(face_with({1.0, 0.0}, 0, 50, 50));
  faces.push_back(face_with({0.72, 0.72}, 1, 50, 50));
  faces.push_back(face_with({0.0, 1.0}, 2, 50, 50));
  REQUIRE(similarity(faces[0].embedding, faces[1].embedding) > cfg.threshold);
  REQUIRE(similarity(faces[1].embedding, faces[2].embedding) > cfg.threshold);
  REQUIRE(similarity(faces[0].embedding, faces[2].embedding) < cfg.threshold);
  auto result = cluster_faces(faces, cfg);
  REQUIRE(result.tracks.size() == 1);
  CHECK(result.tracks[0].faces.size() == 3);
  CHECK(same_tracks(result.tracks, cluster_oracle(faces, cfg)));
}

TEST_CASE("small clusters are pruned; all pruned yields warning status") {
  ClusterConfig cfg;
  cfg.threshold = 0.5;
  cfg.min_cluster_size = 3;
  cfg.similarity = Similarity::dot;
  std::vector<FaceRecord> faces;
  for (int i = 0; i < 4; ++i) faces.push_back(face_with({1, 0}, i, 50, 50));
  faces.push_back(face_with({0, 1}, 0, 90, 90));  // singleton, pruned
  auto result = cluster_faces(faces, cfg);
  REQUIRE(result.tracks.size() == 1);
  CHECK(result.pruned_faces == 1);
  CHECK_FALSE(result.all_pruned);

  auto empty = cluster_faces({face_with({1, 0}, 0, 50, 50)}, cfg);
  CHECK(empty.all_pruned);
  CHECK(empty.tracks.empty());
}

TEST_CASE("ties on mean area break by first appearance") {
  ClusterConfig cfg;
  cfg.threshold = 0.5;
  cfg.min_cluster_size = 1;
  cfg.similarity = Similarity::dot;
  std::vector<FaceRecord> faces;
  faces.push_back(face_with({0, 1}, 5, 50, 50));  // group B appears at frame 5
  faces.push_back(face_with({1, 0}, 2, 50, 50));  // group A appears at frame 2, same area
  auto result = cluster_faces(faces, cfg);
  REQUIRE(result.tracks.size() == 2);
  CHECK(result.tracks[0].faces[0].frame_index == 2);  // earlier frame wins identity 0
  CHECK(result.tracks[1].faces[0].frame_index == 5);
}

TEST_CASE("random instances match the brute-force oracle") {
  Rng rng(424242);
  for (int iter = 0; iter < 60; ++iter) {
    auto faces = random_instance(rng);
    ClusterConfig cfg;
    cfg.threshold = 0.8;
    cfg.min_cluster_size = 1 + static_cast<int>(rng.index(3));
    cfg.similarity = rng.uniform() < 0.5 ? Similarity::cosine : Similarity::dot;
    auto got = cluster_faces(faces, cfg);
    auto want = cluster_oracle(faces, cfg);
    CHECK(same_tracks(got.tracks, want));

    // kept + pruned accounts for every input face; track order non-increasing in area
    int64_t kept_faces = 0;
    for (const auto& t : got.tracks) kept_faces += static_cast<int64_t>(t.faces.size());
    CHECK(kept_faces + got.pruned_faces == static_cast<int64_t>(faces.size()));
    for (size_t i = 1; i < got.tracks.size(); ++i)
      CHECK(got.tracks[i - 1].mean_face_area() >= got.tracks[i].mean_face_area());
  }
}

TEST_CASE("same-frame guard blocks direct duplicate edges") {
  ClusterConfig cfg;
  cfg.threshold = 0.5;
  cfg.min_cluster_size = 1;
  cfg.similarity = Similarity::dot;
  cfg.same_frame_guard = true;
  // two boxes at the same frame, same spot, near-identical embeddings
  std::vector<FaceRecord> faces;
  faces.push_back(face_with({1, 0}, 0, 50, 50, 10, 10));
  faces.push_back(face_with({1, 0}, 0, 52, 52, 11, 11));
  auto guarded = cluster_faces(faces, cfg);
  CHECK(guarded.tracks.size() == 2);

  cfg.same_frame_guard = false;
  auto merged = cluster_faces(faces, cfg);
  CHECK(merged.tracks.size() == 1);
  CHECK(merged.tracks[0].faces.size() == 1);  // duplicate collapsed to larger box
  CHECK(merged.tracks[0].faces[0].bbox[2] == 52);
}
