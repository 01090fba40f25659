#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mintime/clustering.hpp"
#include "mintime/synth.hpp"
#include "mintime/tensor.hpp"

using namespace mintime;
namespace fs = std::filesystem;

namespace {

SynthConfig tiny_config() {
  SynthConfig cfg;
  cfg.num_videos = 6;
  cfg.frames = 8;
  cfg.identities_min = cfg.identities_max = 2;
  cfg.fake_fraction = 0.5;
  cfg.crop_size = 16;
  cfg.seed = 1234;
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("zero fake fraction yields only pristine labels") {
  SynthConfig cfg = tiny_config();
  cfg.fake_fraction = 0.0;
  const fs::path dir = fresh_dir("synth_pristine");
  Manifest m = generate_dataset(cfg, dir.string());
  REQUIRE(m.videos.size() == 6);
  for (const auto& v : m.videos) {
    CHECK(v.label == Label::pristine);
    CHECK_FALSE(v.manipulated_identity.has_value());
  }
  fs::remove_all(dir);
}

TEST_CASE("same seed reproduces the dataset byte for byte") {
  SynthConfig cfg = tiny_config();
  const fs::path a = fresh_dir("synth_det_a");
  const fs::path b = fresh_dir("synth_det_b");
  generate_dataset(cfg, a.string());
  generate_dataset(cfg, b.string());
  CHECK(file_bytes(a / "manifest.jsonl") == file_bytes(b / "manifest.jsonl"));
  CHECK(file_bytes(a / "detections.jsonl") == file_bytes(b / "detections.jsonl"));
  for (const auto& entry : fs::directory_iterator(a / "crops")) {
    const fs::path other = b / "crops" / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(file_bytes(entry.path()) == file_bytes(other));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("strength zero renders fakes identical to their pristine counterparts") {
  SynthConfig cfg = tiny_config();
  cfg.strength = 0.0;
  cfg.fake_fraction = 1.0;
  const fs::path all_fake = fresh_dir("synth_null_fake");
  Manifest fake_m = generate_dataset(cfg, all_fake.string());

  cfg.fake_fraction = 0.0;
  const fs::path all_clean = fresh_dir("synth_null_clean");
  generate_dataset(cfg, all_clean.string());

  bool saw_fake = false;
  for (const auto& v : fake_m.videos) saw_fake = saw_fake || v.label == Label::fake;
  CHECK(saw_fake);
  for (const auto& entry : fs::directory_iterator(all_fake / "crops")) {
    const fs::path other = all_clean / "crops" / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(file_bytes(entry.path()) == file_bytes(other));
  }
  fs::remove_all(all_fake);
  fs::remove_all(all_clean);
}

TEST_CASE("non-manipulated identities render identically in fake and pristine datasets") {
  SynthConfig cfg = tiny_config();
  cfg.strength = 0.9;
  cfg.fake_fraction = 1.0;
  const fs::path fake_dir = fresh_dir("synth_inv_fake");
  Manifest fake_m = generate_dataset(cfg, fake_dir.string());

  cfg.fake_fraction = 0.0;
  const fs::path clean_dir = fresh_dir("synth_inv_clean");
  generate_dataset(cfg, clean_dir.string());

  const size_t crop_elems = static_cast<size_t>(3) * cfg.crop_size * cfg.crop_size;
  bool any_manipulated_differs = false;
  for (const auto& v : fake_m.videos) {
    REQUIRE(v.label == Label::fake);
    REQUIRE(v.manipulated_identity.has_value());
    TensorF32 fake_pack = load_tensor_file_f32((fake_dir / "crops" / (v.video_id + ".mnt")).string());
    TensorF32 clean_pack =
        load_tensor_file_f32((clean_dir / "crops" / (v.video_id + ".mnt")).string());
    REQUIRE(fake_pack.data.size() == clean_pack.data.size());
    for (size_t track = 0; track < v.tracks.size(); ++track) {
      const bool manipulated = static_cast<int>(track) == *v.manipulated_identity;
      bool differs = false;
      for (size_t t = 0; t < static_cast<size_t>(cfg.frames); ++t) {
        const size_t base = (track * static_cast<size_t>(cfg.frames) + t) * crop_elems;
        for (size_t i = 0; i < crop_elems; ++i)
          differs = differs || fake_pack.data[base + i] != clean_pack.data[base + i];
      }
      if (manipulated)
        any_manipulated_differs = any_manipulated_differs || differs;
      else
        CHECK_FALSE(differs);
    }
  }
  CHECK(any_manipulated_differs);
  fs::remove_all(fake_dir);
  fs::remove_all(clean_dir);
}

TEST_CASE("generated manifest is valid and clusterable") {
  SynthConfig cfg = tiny_config();
  const fs::path dir = fresh_dir("synth_valid");
  generate_dataset(cfg, dir.string());

  // loads cleanly through full validation
  Manifest m = load_manifest((dir / "manifest.jsonl").string());
  REQUIRE(m.videos.size() == 6);
  for (const auto& v : m.videos) {
    CHECK(v.tracks.size() == 2);
    // identity 0 has the larger mean face area
    CHECK(v.tracks[0].mean_face_area() >= v.tracks[1].mean_face_area());
    for (const auto& t : v.tracks) CHECK(t.faces.size() == 8);
  }

  // clustering the flat detections recovers the tracks
  DetectionManifest det = load_detections((dir / "detections.jsonl").string());
  ClusterConfig cc;
  cc.threshold = 0.8;
  cc.min_cluster_size = 3;
  for (const auto& d : det.videos) {
    ClusterResult r = cluster_faces(d.faces, cc);
    REQUIRE(r.tracks.size() == 2);
    for (const auto& t : r.tracks) CHECK(t.faces.size() == 8);
  }

  // crop pack shape matches the manifest
  TensorF32 pack = load_tensor_file_f32((dir / "crops" / "v000000.mnt").string());
  REQUIRE(pack.shape.size() == 4);
  CHECK(pack.shape[0] == 16);  // 2 identities x 8 frames
  CHECK(pack.shape[1] == 3);
  CHECK(pack.shape[2] == 16);
  for (float v : pack.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  fs::remove_all(dir);
}

TEST_CASE("temporal jitter anomaly also perturbs only the chosen span") {
  SynthConfig cfg = tiny_config();
  cfg.anomaly = AnomalyKind::temporal_jitter;
  cfg.strength = 1.0;
  cfg.fake_fraction = 1.0;
  const fs::path fake_dir = fresh_dir("synth_jitter_fake");
  Manifest fake_m = generate_dataset(cfg, fake_dir.string());
  cfg.fake_fraction = 0.0;
  const fs::path clean_dir = fresh_dir("synth_jitter_clean");
  generate_dataset(cfg, clean_dir.string());

  const size_t crop_elems = static_cast<size_t>(3) * cfg.crop_size * cfg.crop_size;
  bool any_frame_equal = false, any_frame_differs = false;
  for (const auto& v : fake_m.videos) {
    TensorF32 fake_pack = load_tensor_file_f32((fake_dir / "crops" / (v.video_id + ".mnt")).string());
    TensorF32 clean_pack =
        load_tensor_file_f32((clean_dir / "crops" / (v.video_id + ".mnt")).string());
    const size_t track = static_cast<size_t>(*v.manipulated_identity);
    for (size_t t = 0; t < static_cast<size_t>(cfg.frames); ++t) {
      const size_t base = (track * static_cast<size_t>(cfg.frames) + t) * crop_elems;
      bool differs = false;
      for (size_t i = 0; i < crop_elems; ++i)
        differs = differs || fake_pack.data[base + i] != clean_pack.data[base + i];
      (differs ? any_frame_differs : any_frame_equal) = true;
    }
  }
  CHECK(any_frame_differs);  // inside the span
  CHECK(any_frame_equal);    // outside the span
  fs::remove_all(fake_dir);
  fs::remove_all(clean_dir);
}
