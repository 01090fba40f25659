#include "mintime/trackdata.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "json.hpp"
#include "mintime/errors.hpp"

namespace mintime {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

double area_ratio(const FaceRecord& face) {
  const double frame_area = face.frame_size[0] * face.frame_size[1];
  if (frame_area <= 0) throw DataError("face has empty frame size");
  const double r = (face.bbox[2] * face.bbox[3]) / frame_area;
  if (!(r > 0.0 && r <= 1.0))
    throw DataError("area ratio " + std::to_string(r) + " outside (0,1]");
  return r;
}

double IdentityTrack::mean_face_area() const {
  if (faces.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& f : faces) sum += f.bbox[2] * f.bbox[3];
  return sum / static_cast<double>(faces.size());
}

const char* label_name(Label l) { return l == Label::fake ? "fake" : "pristine"; }

Label parse_label(const std::string& s) {
  if (s == "fake") return Label::fake;
  if (s == "pristine") return Label::pristine;
  throw DataError("unknown label '" + s + "' (expected pristine or fake)");
}

int64_t VideoRecord::total_faces() const {
  int64_t n = 0;
  for (const auto& t : tracks) n += static_cast<int64_t>(t.faces.size());
  return n;
}

const IdentityTrack* VideoRecord::find_track(int identity_id) const {
  for (const auto& t : tracks)
    if (t.identity_id == identity_id) return &t;
  return nullptr;
}

namespace {

[[noreturn]] void fail(int lineno, const std::string& what) {
  throw DataError("manifest line " + std::to_string(lineno) + ": " + what);
}

void validate_face(const FaceRecord& f, int lineno, const std::string& where) {
  if (f.frame_index < 0) fail(lineno, where + ": frame_index must be >= 0");
  const double w = f.bbox[2], h = f.bbox[3];
  const double fw = f.frame_size[0], fh = f.frame_size[1];
  if (fw <= 0 || fh <= 0) fail(lineno, where + ": frame_size must be positive");
  if (!(w > 0) || w > fw) fail(lineno, where + ": bbox.w must be in (0, frame W]");
  if (!(h > 0) || h > fh) fail(lineno, where + ": bbox.h must be in (0, frame H]");
}

FaceRecord parse_face(const json& j, int lineno, const std::string& where, int embedding_dim) {
  FaceRecord f;
  try {
    f.frame_index = j.at("frame_index").get<int64_t>();
    const auto& bbox = j.at("bbox");
    const auto& fs = j.at("frame_size");
    if (bbox.size() != 4) fail(lineno, where + ": bbox must have 4 entries");
    if (fs.size() != 2) fail(lineno, where + ": frame_size must have 2 entries");
    for (int i = 0; i < 4; ++i) f.bbox[i] = bbox[static_cast<size_t>(i)].get<double>();
    for (int i = 0; i < 2; ++i) f.frame_size[i] = fs[static_cast<size_t>(i)].get<double>();
    f.embedding = j.at("embedding").get<std::vector<double>>();
    f.feature_ref = j.value("feature_ref", std::string());
  } catch (const json::exception& e) {
    fail(lineno, where + ": " + e.what());
  }
  if (embedding_dim > 0 && static_cast<int>(f.embedding.size()) != embedding_dim)
    fail(lineno, where + ": embedding has " + std::to_string(f.embedding.size()) +
                     " entries, header declares " + std::to_string(embedding_dim));
  validate_face(f, lineno, where);
  return f;
}

ordered face_to_json(const FaceRecord& f) {
  ordered j;
  j["frame_index"] = f.frame_index;
  j["bbox"] = {f.bbox[0], f.bbox[1], f.bbox[2], f.bbox[3]};
  j["frame_size"] = {f.frame_size[0], f.frame_size[1]};
  j["embedding"] = f.embedding;
  j["feature_ref"] = f.feature_ref;
  return j;
}

int read_header(std::istream& is, const std::string& path) {
  std::string line;
  if (!std::getline(is, line)) return 0;  // empty file: empty manifest
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(path + " line 1: header is not valid JSON: " + e.what());
  }
  if (!j.contains("embedding_dim"))
    throw DataError(path + " line 1: header must declare embedding_dim");
  return j.at("embedding_dim").get<int>();
}

template <typename Record>
void parse_common(const json& j, Record& rec, int lineno) {
  try {
    rec.video_id = j.at("video_id").get<std::string>();
    rec.label = parse_label(j.at("label").get<std::string>());
    if (j.contains("manipulated_identity") && !j.at("manipulated_identity").is_null())
      rec.manipulated_identity = j.at("manipulated_identity").get<int>();
    rec.anomaly_class = j.value("class", std::string());
  } catch (const json::exception& e) {
    fail(lineno, e.what());
  }
}

}  // namespace

Manifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open manifest: " + path);
  Manifest out;
  out.embedding_dim = read_header(is, path);
  std::string line;
  int lineno = 1;
  std::set<std::string> seen_ids;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(lineno, std::string("not valid JSON: ") + e.what());
    }
    VideoRecord rec;
    parse_common(j, rec, lineno);
    if (!seen_ids.insert(rec.video_id).second)
      fail(lineno, "duplicate video_id " + rec.video_id);
    if (!j.contains("tracks")) fail(lineno, "video has no tracks array");
    std::set<int> track_ids;
    for (const auto& tj : j.at("tracks")) {
      IdentityTrack track;
      try {
        track.identity_id = tj.at("identity_id").get<int>();
      } catch (const json::exception& e) {
        fail(lineno, e.what());
      }
      if (track.identity_id < 0) fail(lineno, "identity_id must be >= 0");
      if (!track_ids.insert(track.identity_id).second)
        fail(lineno, "duplicate identity_id " + std::to_string(track.identity_id));
      const std::string where =
          rec.video_id + " track " + std::to_string(track.identity_id);
      int64_t prev_frame = -1;
      for (const auto& fj : tj.at("faces")) {
        FaceRecord f = parse_face(fj, lineno, where, out.embedding_dim);
        if (f.frame_index <= prev_frame)
          fail(lineno, where + ": faces must have strictly increasing frame_index");
        prev_frame = f.frame_index;
        track.faces.push_back(std::move(f));
      }
      rec.tracks.push_back(std::move(track));
    }
    if (rec.tracks.empty()) fail(lineno, "video " + rec.video_id + " has no tracks");
    out.videos.push_back(std::move(rec));
  }
  return out;
}

void save_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open manifest for writing: " + path);
  ordered header;
  header["format"] = "mintime-tracks";
  header["version"] = 1;
  header["embedding_dim"] = manifest.embedding_dim;
  os << header.dump() << "\n";
  for (const auto& v : manifest.videos) {
    ordered j;
    j["video_id"] = v.video_id;
    j["label"] = label_name(v.label);
    if (v.manipulated_identity) j["manipulated_identity"] = *v.manipulated_identity;
    if (!v.anomaly_class.empty()) j["class"] = v.anomaly_class;
    j["tracks"] = ordered::array();
    for (const auto& t : v.tracks) {
      ordered tj;
      tj["identity_id"] = t.identity_id;
      tj["faces"] = ordered::array();
      for (const auto& f : t.faces) tj["faces"].push_back(face_to_json(f));
      j["tracks"].push_back(std::move(tj));
    }
    os << j.dump() << "\n";
  }
  if (!os) throw DataError("short write on manifest: " + path);
}

DetectionManifest load_detections(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open detections manifest: " + path);
  DetectionManifest out;
  out.embedding_dim = read_header(is, path);
  std::string line;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(lineno, std::string("not valid JSON: ") + e.what());
    }
    DetectionRecord rec;
    parse_common(j, rec, lineno);
    if (!j.contains("faces")) fail(lineno, "detection record has no faces array");
    for (const auto& fj : j.at("faces"))
      rec.faces.push_back(parse_face(fj, lineno, rec.video_id, out.embedding_dim));
    out.videos.push_back(std::move(rec));
  }
  return out;
}

void save_detections(const std::string& path, const DetectionManifest& manifest) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open detections manifest for writing: " + path);
  ordered header;
  header["format"] = "mintime-detections";
  header["version"] = 1;
  header["embedding_dim"] = manifest.embedding_dim;
  os << header.dump() << "\n";
  for (const auto& v : manifest.videos) {
    ordered j;
    j["video_id"] = v.video_id;
    j["label"] = label_name(v.label);
    if (v.manipulated_identity) j["manipulated_identity"] = *v.manipulated_identity;
    if (!v.anomaly_class.empty()) j["class"] = v.anomaly_class;
    j["faces"] = ordered::array();
    for (const auto& f : v.faces) j["faces"].push_back(face_to_json(f));
    os << j.dump() << "\n";
  }
  if (!os) throw DataError("short write on detections manifest: " + path);
}

RatioStats ratio_stats(const Manifest& manifest) {
  RatioStats s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  // Welford's online mean/variance; the test oracle is a two-pass sum.
  double mean = 0.0, m2 = 0.0;
  for (const auto& v : manifest.videos)
    for (const auto& t : v.tracks)
      for (const auto& f : t.faces) {
        const double r = area_ratio(f) * 100.0;
        ++s.count;
        const double delta = r - mean;
        mean += delta / static_cast<double>(s.count);
        m2 += delta * (r - mean);
        s.min = std::min(s.min, r);
        s.max = std::max(s.max, r);
      }
  if (s.count == 0) throw DataError("ratio_stats: manifest contains no faces");
  s.mean = mean;
  s.variance = m2 / static_cast<double>(s.count);
  return s;
}

}  // namespace mintime
