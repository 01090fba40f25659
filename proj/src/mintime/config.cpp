#include "mintime/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mintime/errors.hpp"

namespace mintime {

RunConfig::RunConfig() {
  // Global.
  add("seed", "42", "root seed for every random stream (env MINTIME_SEED is the fallback)");
  add("jobs", "0", "worker threads for per-video stages; 0 = hardware concurrency");

  // Synthetic benchmark generator.
  add("synth.num_videos", "200", "videos to generate");
  add("synth.frames", "24", "frames per video");
  add("synth.identities", "2", "identities per video, a count or a range like 1-3");
  add("synth.fake_fraction", "0.5", "fraction of videos labeled fake");
  add("synth.face_frac_min", "0.02", "smallest face area as a fraction of the frame");
  add("synth.face_frac_max", "0.30", "largest face area as a fraction of the frame");
  add("synth.anomaly", "texture_patch", "anomaly kind: texture_patch or temporal_jitter");
  add("synth.strength", "0.8", "anomaly strength; 0 renders fakes identical to pristine");
  add("synth.crop_size", "32", "face crop height/width in pixels");
  add("synth.embedding_dim", "8", "face embedding dimensionality");
  add("synth.frame_width", "640", "synthetic frame width in pixels");
  add("synth.frame_height", "360", "synthetic frame height in pixels");

  // Identity clustering.
  add("cluster.threshold", "0.8", "similarity threshold for connecting two faces");
  add("cluster.min_cluster_size", "3", "clusters smaller than this are dropped");
  add("cluster.similarity", "cosine", "similarity measure: cosine or dot");
  add("cluster.same_frame_guard", "false",
      "when true, same-frame faces overlapping >= 50% are never connected directly");

  // Sequence assembly.
  add("assemble.sequence_length", "16", "input sequence length N");
  add("assemble.sorting", "size_based", "identity order: size_based, frequency_based or random");
  add("assemble.epoch", "0", "epoch index used by the assemble subcommand's sampling phase");
  add("train.max_identities", "2", "identities kept per sequence during training");
  add("infer.max_identities", "0", "identities kept per sequence at inference; 0 = unlimited");

  // Model.
  add("model.dim", "64", "token width D");
  add("model.depth", "2", "transformer blocks");
  add("model.heads", "4", "attention heads");
  add("model.crop_size", "32", "expected crop height/width");
  add("model.feature_grid", "4", "backbone output grid side H'=W'; tokens per face T = H'*W'");
  add("model.mlp_ratio", "4", "MLP hidden width as a multiple of D");
  add("model.max_frames", "64", "largest frame index supported by the temporal embedding table");
  add("model.spatial_across_identities", "false",
      "spatial attention spans all same-frame tokens instead of same-face tokens");

  // Training.
  add("train.epochs", "10", "training epochs");
  add("train.batch_size", "8", "videos per SGD step");
  add("train.lr_max", "0.01", "initial learning rate of the cosine schedule");
  add("train.lr_min", "0.0001", "final learning rate of the cosine schedule");
  add("train.weight_decay", "0.0001", "SGD weight decay");

  // Evaluation.
  add("eval.threshold", "0.5", "score threshold for accuracy/FPR");

  if (const char* env = std::getenv("MINTIME_SEED")) {
    std::string s(env);
    if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos)
      find("seed")->value = s;
  }
}

void RunConfig::add(const std::string& key, const std::string& def, const std::string& desc) {
  entries_.push_back({key, def, desc});
}

RunConfig::Entry* RunConfig::find(const std::string& key) {
  for (auto& e : entries_)
    if (e.key == key) return &e;
  return nullptr;
}

const RunConfig::Entry* RunConfig::find(const std::string& key) const {
  for (auto& e : entries_)
    if (e.key == key) return &e;
  return nullptr;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  Entry* e = find(key);
  if (!e) throw ConfigError("unknown config key: " + key);
  e->value = value;
}

bool RunConfig::has(const std::string& key) const { return find(key) != nullptr; }

void RunConfig::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    const std::string stripped = strip(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = strip(stripped.substr(0, eq));
    const std::string value = strip(stripped.substr(eq + 1));
    if (!find(key))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown config key: " + key);
    set(key, value);
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) throw ConfigError("unknown config key: " + key);
  return e->value;
}

int64_t RunConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t pos = 0;
    const int64_t n = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " expects an integer, got '" + v + "'");
  }
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " expects a number, got '" + v + "'");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key " + key + " expects a boolean, got '" + v + "'");
}

std::string RunConfig::get_enum(const std::string& key,
                                const std::vector<std::string>& options) const {
  const std::string& v = get(key);
  if (std::find(options.begin(), options.end(), v) == options.end()) {
    std::string allowed;
    for (const auto& o : options) allowed += (allowed.empty() ? "" : ", ") + o;
    throw ConfigError("config key " + key + " must be one of {" + allowed + "}, got '" + v + "'");
  }
  return v;
}

uint64_t RunConfig::seed() const { return static_cast<uint64_t>(get_int("seed")); }

int RunConfig::jobs() const { return static_cast<int>(get_int("jobs")); }

std::string RunConfig::dump() const {
  std::ostringstream os;
  for (const auto& e : entries_) os << e.key << "=" << e.value << "\n";
  return os.str();
}

std::vector<std::string> RunConfig::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.key);
  return out;
}

const std::string& RunConfig::describe(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) throw ConfigError("unknown config key: " + key);
  return e->description;
}

}  // namespace mintime
