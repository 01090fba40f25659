#include "mintime/assembler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mintime/embeddings.hpp"
#include "mintime/errors.hpp"
#include "mintime/rng.hpp"

namespace mintime {

SortPolicy parse_sort_policy(const std::string& s) {
  if (s == "size_based") return SortPolicy::size_based;
  if (s == "frequency_based") return SortPolicy::frequency_based;
  if (s == "random") return SortPolicy::random;
  throw ConfigError("unknown sorting policy '" + s + "'");
}

int InputSequence::valid_count() const {
  int n = 0;
  for (const auto& s : slots) n += s.valid ? 1 : 0;
  return n;
}

std::vector<int> InputSequence::identities() const {
  std::vector<int> ids;
  for (const auto& s : slots)
    if (s.valid && std::find(ids.begin(), ids.end(), s.identity_id) == ids.end())
      ids.push_back(s.identity_id);
  return ids;
}

std::vector<const IdentityTrack*> sort_identities(const std::vector<IdentityTrack>& tracks,
                                                  SortPolicy policy, uint64_t seed) {
  if (tracks.empty()) throw DataError("sort_identities: no tracks");
  std::vector<const IdentityTrack*> order;
  order.reserve(tracks.size());
  for (const auto& t : tracks) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(),
                   [](const IdentityTrack* a, const IdentityTrack* b) {
                     return a->identity_id < b->identity_id;
                   });
  switch (policy) {
    case SortPolicy::size_based:
      std::stable_sort(order.begin(), order.end(),
                       [](const IdentityTrack* a, const IdentityTrack* b) {
                         return a->mean_face_area() > b->mean_face_area();
                       });
      break;
    case SortPolicy::frequency_based:
      std::stable_sort(order.begin(), order.end(),
                       [](const IdentityTrack* a, const IdentityTrack* b) {
                         return a->faces.size() > b->faces.size();
                       });
      break;
    case SortPolicy::random: {
      Rng rng(derive_seed(seed, "sort.random"));
      for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.index(i)]);
      break;
    }
  }
  return order;
}

std::vector<int> allocate_slots(const std::vector<int64_t>& available, int sequence_length,
                                int max_identities) {
  if (available.empty()) throw DataError("allocate_slots: no identities");
  if (sequence_length < 1) throw ConfigError("sequence length must be >= 1");
  const int k =
      max_identities > 0
          ? std::min<int>(max_identities, static_cast<int>(available.size()))
          : static_cast<int>(available.size());
  std::vector<int> quota(static_cast<size_t>(k), sequence_length / k);
  for (int r = 0; r < sequence_length % k; ++r) ++quota[static_cast<size_t>(r)];

  // Inheritance: identities short of faces release surplus slots to the next
  // identity (in priority order) with spare faces, until nothing moves.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < k; ++i) {
      const auto ai = available[static_cast<size_t>(i)];
      if (quota[static_cast<size_t>(i)] <= ai) continue;
      int surplus = quota[static_cast<size_t>(i)] - static_cast<int>(ai);
      quota[static_cast<size_t>(i)] = static_cast<int>(ai);
      changed = true;
      for (int j = 0; j < k && surplus > 0; ++j) {
        if (j == i) continue;
        const int capacity =
            static_cast<int>(available[static_cast<size_t>(j)]) - quota[static_cast<size_t>(j)];
        if (capacity <= 0) continue;
        const int give = std::min(surplus, capacity);
        quota[static_cast<size_t>(j)] += give;
        surplus -= give;
      }
    }
  }
  return quota;
}

std::vector<int64_t> uniform_indices(int64_t available, int quota, double phase) {
  if (quota < 0) throw ConfigError("uniform_indices: quota must be >= 0");
  std::vector<int64_t> out;
  if (quota == 0 || available <= 0) return out;
  if (available <= quota) {
    for (int64_t i = 0; i < available; ++i) out.push_back(i);
    return out;
  }
  const double stride = static_cast<double>(available) / static_cast<double>(quota);
  for (int q = 0; q < quota; ++q) {
    auto idx = static_cast<int64_t>(std::floor(static_cast<double>(q) * stride + phase));
    if (idx >= available) idx = available - 1;
    out.push_back(idx);
  }
  return out;
}

std::vector<const FaceRecord*> uniform_sample(const IdentityTrack& track, int quota,
                                              uint64_t seed, int64_t epoch,
                                              const std::string& video_id) {
  const auto available = static_cast<int64_t>(track.faces.size());
  double phase = 0.0;
  if (available > quota && quota > 0) {
    const double stride = static_cast<double>(available) / static_cast<double>(quota);
    Rng rng(derive_seed(seed, "sample", static_cast<uint64_t>(epoch),
                        hash_str(video_id), static_cast<uint64_t>(track.identity_id)));
    phase = rng.uniform(0.0, stride);
  }
  std::vector<const FaceRecord*> out;
  for (int64_t idx : uniform_indices(available, quota, phase))
    out.push_back(&track.faces[static_cast<size_t>(idx)]);
  return out;
}

InputSequence assemble(const VideoRecord& video, const AssemblyConfig& cfg) {
  if (video.tracks.empty()) throw DataError("assemble: video " + video.video_id + " has no tracks");
  if (video.total_faces() == 0)
    throw DataError("assemble: video " + video.video_id + " has no faces");

  const auto order = sort_identities(video.tracks, cfg.sorting, cfg.seed);
  const int k = cfg.max_identities > 0
                    ? std::min<int>(cfg.max_identities, static_cast<int>(order.size()))
                    : static_cast<int>(order.size());
  std::vector<int64_t> available;
  available.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) available.push_back(static_cast<int64_t>(order[i]->faces.size()));
  const std::vector<int> quota = allocate_slots(available, cfg.sequence_length, k);

  InputSequence seq;
  seq.video_id = video.video_id;
  seq.label = video.label;
  seq.manipulated_identity = video.manipulated_identity;
  seq.anomaly_class = video.anomaly_class;
  seq.slots.resize(static_cast<size_t>(cfg.sequence_length));

  size_t at = 0;
  for (int i = 0; i < k; ++i) {
    const IdentityTrack& track = *order[i];
    for (const FaceRecord* face :
         uniform_sample(track, quota[static_cast<size_t>(i)], cfg.seed, cfg.epoch, video.video_id)) {
      Slot& slot = seq.slots[at++];
      slot.valid = true;
      slot.identity_id = track.identity_id;
      slot.frame_index = face->frame_index;
      slot.ratio = area_ratio(*face);
      slot.size_bin = size_bin(slot.ratio);
      slot.feature_ref = face->feature_ref;
    }
  }
  return seq;  // remaining slots stay PAD/invalid
}

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_i32(std::ostream& os, int32_t v) { put_u32(os, static_cast<uint32_t>(v)); }
int32_t get_i32(std::istream& is) { return static_cast<int32_t>(get_u32(is)); }

void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const uint32_t n = get_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

void put_f64(std::ostream& os, double v) {
  static_assert(sizeof(double) == 8);
  os.write(reinterpret_cast<const char*>(&v), 8);
}

double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

constexpr char kSeqMagic[4] = {'M', 'N', 'S', 'Q'};

}  // namespace

void save_sequences(const std::string& path, const std::vector<InputSequence>& sequences,
                    int sequence_length, const int64_t crop_shape[3],
                    const std::string& source_dir) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open sequence file for writing: " + path);
  os.write(kSeqMagic, 4);
  put_u32(os, 1);  // version
  put_u32(os, static_cast<uint32_t>(sequence_length));
  for (int i = 0; i < 3; ++i) put_u32(os, static_cast<uint32_t>(crop_shape[i]));
  put_string(os, source_dir);
  put_u32(os, static_cast<uint32_t>(sequences.size()));
  for (const auto& seq : sequences) {
    if (static_cast<int>(seq.slots.size()) != sequence_length)
      throw ShapeError("sequence slot count differs from header N");
    put_string(os, seq.video_id);
    const unsigned char label = seq.label == Label::fake ? 1 : 0;
    os.write(reinterpret_cast<const char*>(&label), 1);
    put_i32(os, seq.manipulated_identity ? *seq.manipulated_identity : -1);
    put_string(os, seq.anomaly_class);
    for (const auto& slot : seq.slots) {
      const unsigned char valid = slot.valid ? 1 : 0;
      os.write(reinterpret_cast<const char*>(&valid), 1);
      put_i32(os, slot.identity_id);
      put_i32(os, static_cast<int32_t>(slot.frame_index));
      put_i32(os, slot.size_bin);
      put_f64(os, slot.ratio);
      put_string(os, slot.feature_ref);
    }
  }
  if (!os) throw DataError("short write on sequence file: " + path);
}

SequenceFile load_sequences(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open sequence file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kSeqMagic, 4) != 0)
    throw DataError("bad magic in sequence file: " + path);
  const uint32_t version = get_u32(is);
  if (version != 1) throw DataError("unsupported sequence file version");
  SequenceFile file;
  file.sequence_length = static_cast<int>(get_u32(is));
  for (int i = 0; i < 3; ++i) file.crop_shape[i] = get_u32(is);
  file.source_dir = get_string(is);
  const uint32_t count = get_u32(is);
  for (uint32_t s = 0; s < count; ++s) {
    InputSequence seq;
    seq.video_id = get_string(is);
    unsigned char label = 0;
    is.read(reinterpret_cast<char*>(&label), 1);
    seq.label = label ? Label::fake : Label::pristine;
    const int32_t manip = get_i32(is);
    if (manip >= 0) seq.manipulated_identity = manip;
    seq.anomaly_class = get_string(is);
    seq.slots.resize(static_cast<size_t>(file.sequence_length));
    for (auto& slot : seq.slots) {
      unsigned char valid = 0;
      is.read(reinterpret_cast<char*>(&valid), 1);
      slot.valid = valid != 0;
      slot.identity_id = get_i32(is);
      slot.frame_index = get_i32(is);
      slot.size_bin = get_i32(is);
      slot.ratio = get_f64(is);
      slot.feature_ref = get_string(is);
    }
    file.sequences.push_back(std::move(seq));
  }
  if (!is) throw DataError("truncated sequence file: " + path);
  return file;
}

}  // namespace mintime
