#include "mintime/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "mintime/clustering.hpp"
#include "mintime/errors.hpp"
#include "mintime/evaluation.hpp"
#include "mintime/parallel.hpp"
#include "mintime/rng.hpp"
#include "mintime/synth.hpp"

namespace mintime {

namespace fs = std::filesystem;
using ordered = nlohmann::ordered_json;

Tensor CropStore::load(const std::string& feature_ref, int expected_side) const {
  const auto hash = feature_ref.find('#');
  if (hash == std::string::npos)
    throw DataError("feature ref '" + feature_ref + "' is not of the form pack.mnt#index");
  const std::string rel = feature_ref.substr(0, hash);
  int64_t index = 0;
  try {
    index = std::stoll(feature_ref.substr(hash + 1));
  } catch (const std::exception&) {
    throw DataError("feature ref '" + feature_ref + "' has a malformed index");
  }
  const TensorF32& p = pack(rel);
  if (p.shape.size() != 4 || p.shape[1] != 3)
    throw DataError("crop pack " + rel + " must have shape [faces, 3, H, W]");
  if (index < 0 || index >= p.shape[0])
    throw DataError("feature ref '" + feature_ref + "' indexes past the pack");
  const int side = static_cast<int>(p.shape[2]);
  if (p.shape[2] != p.shape[3] || side != expected_side)
    throw DataError("crop pack " + rel + " stores " + std::to_string(p.shape[2]) + "x" +
                    std::to_string(p.shape[3]) + " crops, model expects " +
                    std::to_string(expected_side));
  const size_t crop_elems = static_cast<size_t>(3) * side * side;
  return Backbone::crop_to_input(p.data.data() + static_cast<size_t>(index) * crop_elems, 3,
                                 side);
}

const TensorF32& CropStore::pack(const std::string& rel_path) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = packs_.find(rel_path);
  if (it == packs_.end())
    it = packs_.emplace(rel_path, load_tensor_file_f32((fs::path(base_dir_) / rel_path).string()))
             .first;
  return it->second;
}

ModelInput to_model_input(const InputSequence& seq, const CropStore& crops,
                          const ModelConfig& cfg) {
  ModelInput input;
  input.video_id = seq.video_id;
  input.label = seq.label;
  input.slots.resize(seq.slots.size());
  for (size_t i = 0; i < seq.slots.size(); ++i) {
    const Slot& slot = seq.slots[i];
    auto& out = input.slots[i];
    out.valid = slot.valid;
    if (!slot.valid) continue;
    out.identity_id = slot.identity_id;
    out.frame_index = slot.frame_index;
    out.size_bin = slot.size_bin;
    out.crop = crops.load(slot.feature_ref, cfg.crop_size);
  }
  return input;
}

namespace pipeline {

namespace {

void log_run(const RunConfig& cfg, const std::string& subcommand) {
  std::cerr << "[mintime] " << subcommand << " seed=" << cfg.seed() << "\n";
  std::istringstream dump(cfg.dump());
  std::string line;
  while (std::getline(dump, line)) std::cerr << "[config] " << line << "\n";
}

void write_text(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream os(path);
  if (!os) throw DataError("cannot open output file: " + path);
  os << content;
  if (!content.empty() && content.back() != '\n') os << "\n";
}

SynthConfig synth_config(const RunConfig& cfg) {
  SynthConfig sc;
  sc.num_videos = static_cast<int>(cfg.get_int("synth.num_videos"));
  sc.frames = static_cast<int>(cfg.get_int("synth.frames"));
  const std::string ids = cfg.get("synth.identities");
  const auto dash = ids.find('-');
  try {
    if (dash == std::string::npos) {
      sc.identities_min = sc.identities_max = std::stoi(ids);
    } else {
      sc.identities_min = std::stoi(ids.substr(0, dash));
      sc.identities_max = std::stoi(ids.substr(dash + 1));
    }
  } catch (const std::exception&) {
    throw ConfigError("synth.identities expects a count or a range like 1-3, got '" + ids + "'");
  }
  sc.fake_fraction = cfg.get_double("synth.fake_fraction");
  sc.face_frac_min = cfg.get_double("synth.face_frac_min");
  sc.face_frac_max = cfg.get_double("synth.face_frac_max");
  sc.anomaly = parse_anomaly(
      cfg.get_enum("synth.anomaly", {"texture_patch", "temporal_jitter"}));
  sc.strength = cfg.get_double("synth.strength");
  sc.crop_size = static_cast<int>(cfg.get_int("synth.crop_size"));
  sc.embedding_dim = static_cast<int>(cfg.get_int("synth.embedding_dim"));
  sc.frame_width = static_cast<int>(cfg.get_int("synth.frame_width"));
  sc.frame_height = static_cast<int>(cfg.get_int("synth.frame_height"));
  sc.seed = cfg.seed();
  return sc;
}

ModelConfig model_config(const RunConfig& cfg) {
  ModelConfig mc;
  mc.dim = static_cast<int>(cfg.get_int("model.dim"));
  mc.depth = static_cast<int>(cfg.get_int("model.depth"));
  mc.heads = static_cast<int>(cfg.get_int("model.heads"));
  mc.crop_size = static_cast<int>(cfg.get_int("model.crop_size"));
  mc.feature_grid = static_cast<int>(cfg.get_int("model.feature_grid"));
  mc.mlp_ratio = static_cast<int>(cfg.get_int("model.mlp_ratio"));
  mc.max_frames = cfg.get_int("model.max_frames");
  mc.sequence_length = static_cast<int>(cfg.get_int("assemble.sequence_length"));
  mc.spatial_across_identities = cfg.get_bool("model.spatial_across_identities");
  mc.validate();
  return mc;
}

AssemblyConfig assembly_config(const RunConfig& cfg, int max_identities, int64_t epoch) {
  AssemblyConfig ac;
  ac.sequence_length = static_cast<int>(cfg.get_int("assemble.sequence_length"));
  ac.max_identities = max_identities;
  ac.sorting = parse_sort_policy(
      cfg.get_enum("assemble.sorting", {"size_based", "frequency_based", "random"}));
  ac.seed = cfg.seed();
  ac.epoch = epoch;
  return ac;
}

struct ScoredSet {
  std::vector<ScoredVideo> videos;
};

ScoredSet score_manifest(const RunConfig& cfg, const std::string& manifest_path,
                         const MintimeModel& model) {
  const Manifest manifest = load_manifest(manifest_path);
  if (manifest.videos.empty()) throw DataError("manifest has no videos: " + manifest_path);
  const CropStore crops(fs::path(manifest_path).parent_path().string());
  ModelConfig mc = model.config();
  const AssemblyConfig ac =
      assembly_config(cfg, static_cast<int>(cfg.get_int("infer.max_identities")),
                      cfg.get_int("assemble.epoch"));
  if (ac.sequence_length != mc.sequence_length)
    throw ConfigError("assemble.sequence_length does not match the checkpoint");

  ScoredSet out;
  out.videos.resize(manifest.videos.size());
  parallel_for(static_cast<int64_t>(manifest.videos.size()), resolve_jobs(cfg.jobs()),
               [&](int64_t i) {
                 const VideoRecord& video = manifest.videos[static_cast<size_t>(i)];
                 const InputSequence seq = assemble(video, ac);
                 const ModelInput input = to_model_input(seq, crops, mc);
                 const InferenceResult result = model.infer(input);
                 ScoredVideo& sv = out.videos[static_cast<size_t>(i)];
                 sv.video_id = video.video_id;
                 sv.score = result.score;
                 sv.label = video.label;
                 sv.anomaly_class = video.anomaly_class;
                 sv.manipulated_identity = video.manipulated_identity;
                 sv.attention = result.attention;
               });
  return out;
}

ordered video_json(const ScoredVideo& v, double threshold, bool with_truth) {
  ordered j;
  j["video_id"] = v.video_id;
  j["score"] = v.score;
  j["prediction"] = v.score >= threshold ? "fake" : "pristine";
  j["label"] = label_name(v.label);
  if (!v.anomaly_class.empty()) j["class"] = v.anomaly_class;
  const Localization loc = localize(v.attention);
  j["suspect_identity"] = loc.suspect_identity;
  j["suspect_frames"] = loc.suspect_frames;
  if (with_truth && v.manipulated_identity) {
    j["manipulated_identity"] = *v.manipulated_identity;
    j["localization_correct"] = loc.suspect_identity == *v.manipulated_identity;
  }
  ordered slots = ordered::array();
  for (size_t i = 0; i < v.attention.slot_values.size(); ++i) {
    ordered s;
    s["slot"] = i;
    s["identity"] = v.attention.slot_identity[i];
    s["frame"] = v.attention.slot_frame[i];
    s["value"] = v.attention.slot_values[i];
    slots.push_back(std::move(s));
  }
  j["attention"] = std::move(slots);
  return j;
}

}  // namespace

void run_synth(const RunConfig& cfg, const std::string& out_dir) {
  log_run(cfg, "synth");
  const SynthConfig sc = synth_config(cfg);
  const Manifest manifest = generate_dataset(sc, out_dir, resolve_jobs(cfg.jobs()));
  int64_t fakes = 0;
  for (const auto& v : manifest.videos) fakes += v.label == Label::fake ? 1 : 0;
  std::cerr << "[mintime] synth wrote " << manifest.videos.size() << " videos (" << fakes
            << " fake) to " << out_dir << "\n";
}

void run_cluster(const RunConfig& cfg, const std::string& detections_path,
                 const std::string& out_manifest) {
  log_run(cfg, "cluster");
  const DetectionManifest detections = load_detections(detections_path);
  ClusterConfig cc;
  cc.threshold = cfg.get_double("cluster.threshold");
  cc.min_cluster_size = static_cast<int>(cfg.get_int("cluster.min_cluster_size"));
  cc.similarity = cfg.get_enum("cluster.similarity", {"cosine", "dot"}) == "cosine"
                      ? Similarity::cosine
                      : Similarity::dot;
  cc.same_frame_guard = cfg.get_bool("cluster.same_frame_guard");

  Manifest manifest;
  manifest.embedding_dim = detections.embedding_dim;
  std::vector<VideoRecord> videos(detections.videos.size());
  std::vector<uint8_t> keep(detections.videos.size(), 0);
  parallel_for(static_cast<int64_t>(detections.videos.size()), resolve_jobs(cfg.jobs()),
               [&](int64_t i) {
                 const DetectionRecord& det = detections.videos[static_cast<size_t>(i)];
                 const ClusterResult result = cluster_faces(det.faces, cc);
                 if (result.all_pruned) return;  // reported below, in input order
                 VideoRecord rec;
                 rec.video_id = det.video_id;
                 rec.label = det.label;
                 rec.manipulated_identity = det.manipulated_identity;
                 rec.anomaly_class = det.anomaly_class;
                 rec.tracks = result.tracks;
                 videos[static_cast<size_t>(i)] = std::move(rec);
                 keep[static_cast<size_t>(i)] = 1;
               });
  for (size_t i = 0; i < videos.size(); ++i) {
    if (keep[i])
      manifest.videos.push_back(std::move(videos[i]));
    else
      std::cerr << "[mintime] cluster: video " << detections.videos[i].video_id
                << " lost every cluster to pruning, skipped\n";
  }
  save_manifest(out_manifest, manifest);
  std::cerr << "[mintime] cluster wrote " << manifest.videos.size() << " videos to "
            << out_manifest << "\n";
}

void run_assemble(const RunConfig& cfg, const std::string& manifest_path,
                  const std::string& out_path) {
  log_run(cfg, "assemble");
  const Manifest manifest = load_manifest(manifest_path);
  const ModelConfig mc = model_config(cfg);
  const AssemblyConfig ac =
      assembly_config(cfg, static_cast<int>(cfg.get_int("train.max_identities")),
                      cfg.get_int("assemble.epoch"));
  std::vector<InputSequence> sequences;
  sequences.reserve(manifest.videos.size());
  for (const auto& video : manifest.videos) sequences.push_back(assemble(video, ac));
  const int64_t crop_shape[3] = {3, mc.crop_size, mc.crop_size};
  save_sequences(out_path, sequences, ac.sequence_length, crop_shape,
                 fs::path(manifest_path).parent_path().string());
  std::cerr << "[mintime] assemble wrote " << sequences.size() << " sequences to " << out_path
            << "\n";
}

void run_train(const RunConfig& cfg, const std::string& manifest_path,
               const std::string& checkpoint_dir) {
  log_run(cfg, "train");
  const Manifest manifest = load_manifest(manifest_path);
  if (manifest.videos.empty()) throw DataError("manifest has no videos: " + manifest_path);
  const ModelConfig mc = model_config(cfg);
  const CropStore crops(fs::path(manifest_path).parent_path().string());

  const int epochs = static_cast<int>(cfg.get_int("train.epochs"));
  const int batch_size = static_cast<int>(cfg.get_int("train.batch_size"));
  if (epochs < 1 || batch_size < 1) throw ConfigError("train.epochs and train.batch_size must be >= 1");
  const int jobs = resolve_jobs(cfg.jobs());
  const int64_t n = static_cast<int64_t>(manifest.videos.size());
  const int64_t steps_per_epoch = (n + batch_size - 1) / batch_size;

  MintimeModel model(mc, cfg.seed());
  Trainer trainer(model, cfg.get_double("train.lr_max"), cfg.get_double("train.lr_min"),
                  cfg.get_double("train.weight_decay"), epochs * steps_per_epoch);
  std::cerr << "[mintime] train: " << n << " videos, " << epochs << " epochs, "
            << model.params().total_elements() << " parameters\n";

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(derive_seed(cfg.seed(), "epoch_order", static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle.index(i)]);

    const AssemblyConfig ac = assembly_config(
        cfg, static_cast<int>(cfg.get_int("train.max_identities")), epoch);
    double epoch_loss = 0.0;
    int64_t steps = 0;
    for (int64_t at = 0; at < n; at += batch_size) {
      const int64_t take = std::min<int64_t>(batch_size, n - at);
      std::vector<ModelInput> inputs(static_cast<size_t>(take));
      parallel_for(take, jobs, [&](int64_t b) {
        const VideoRecord& video =
            manifest.videos[static_cast<size_t>(order[static_cast<size_t>(at + b)])];
        inputs[static_cast<size_t>(b)] = to_model_input(assemble(video, ac), crops, mc);
      });
      std::vector<const ModelInput*> batch;
      for (const auto& in : inputs) batch.push_back(&in);
      epoch_loss += trainer.train_step(batch, jobs);
      ++steps;
    }
    std::cerr << "[mintime] epoch " << epoch << ": loss " << epoch_loss / static_cast<double>(steps)
              << " lr " << trainer.lr_at(trainer.step_count()) << "\n";
  }
  model.save(checkpoint_dir);
  std::cerr << "[mintime] train saved checkpoint to " << checkpoint_dir << "\n";
}

void run_infer(const RunConfig& cfg, const std::string& manifest_path,
               const std::string& checkpoint_dir, const std::string& out_json) {
  log_run(cfg, "infer");
  const MintimeModel model = MintimeModel::load(checkpoint_dir);
  const ScoredSet scored = score_manifest(cfg, manifest_path, model);
  const double threshold = cfg.get_double("eval.threshold");
  ordered arr = ordered::array();
  for (const auto& v : scored.videos) arr.push_back(video_json(v, threshold, false));
  write_text(out_json, arr.dump(2));
}

void run_eval(const RunConfig& cfg, const std::string& manifest_path,
              const std::string& checkpoint_dir, const std::string& report_json,
              const std::string& localization_json) {
  log_run(cfg, "eval");
  const MintimeModel model = MintimeModel::load(checkpoint_dir);
  const ScoredSet scored = score_manifest(cfg, manifest_path, model);
  const double threshold = cfg.get_double("eval.threshold");
  const EvalReport report = evaluate(scored.videos, threshold);

  ordered j;
  j["accuracy"] = report.accuracy;
  j["auc"] = report.auc;
  j["fpr"] = report.fpr;
  j["mav"] = report.mav;
  ordered pc;
  for (const auto& [cls, acc] : report.per_class) pc[cls] = acc;
  j["per_class"] = std::move(pc);

  // Localization against ground truth, over correctly flagged fakes.
  int64_t evaluated = 0, correct = 0;
  for (const auto& v : scored.videos) {
    if (v.label != Label::fake || !v.manipulated_identity || v.score < threshold) continue;
    ++evaluated;
    correct += localize(v.attention).suspect_identity == *v.manipulated_identity ? 1 : 0;
  }
  if (evaluated > 0) {
    ordered loc;
    loc["evaluated"] = evaluated;
    loc["correct"] = correct;
    loc["accuracy"] = static_cast<double>(correct) / static_cast<double>(evaluated);
    j["localization"] = std::move(loc);
  }
  write_text(report_json, j.dump(2));

  if (!localization_json.empty()) {
    ordered arr = ordered::array();
    for (const auto& v : scored.videos) arr.push_back(video_json(v, threshold, true));
    write_text(localization_json, arr.dump(2));
  }
}

void run_stats(const RunConfig& cfg, const std::string& manifest_path,
               const std::string& out_json) {
  log_run(cfg, "stats");
  const Manifest manifest = load_manifest(manifest_path);
  const RatioStats stats = ratio_stats(manifest);
  ordered j;
  j["min"] = stats.min;
  j["max"] = stats.max;
  j["mean"] = stats.mean;
  j["variance"] = stats.variance;
  write_text(out_json, j.dump(2));
}

void run_plot(const RunConfig& cfg, const std::string& scores_json, const std::string& out_dir) {
  log_run(cfg, "plot");
  std::ifstream is(scores_json);
  if (!is) throw ConfigError("cannot open scores file: " + scores_json);
  ordered arr;
  try {
    is >> arr;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scores file is not valid JSON: ") + e.what());
  }
  if (!arr.is_array()) throw DataError("scores file must hold a JSON array");
  fs::create_directories(out_dir);
  int64_t written = 0;
  for (const auto& entry : arr) {
    AttentionReport report;
    for (const auto& slot : entry.at("attention")) {
      report.slot_values.push_back(slot.at("value").get<double>());
      report.slot_identity.push_back(slot.at("identity").get<int>());
      report.slot_frame.push_back(slot.at("frame").get<int64_t>());
    }
    const std::string id = entry.at("video_id").get<std::string>();
    const std::string title =
        id + "  score=" + std::to_string(entry.at("score").get<double>());
    std::ofstream os(fs::path(out_dir) / (id + ".svg"));
    if (!os) throw DataError("cannot write SVG under " + out_dir);
    os << svg_attention_histogram(report, title);
    ++written;
  }
  std::cerr << "[mintime] plot wrote " << written << " SVG files to " << out_dir << "\n";
}

}  // namespace pipeline

}  // namespace mintime
