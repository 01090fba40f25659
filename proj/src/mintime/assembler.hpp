#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mintime/trackdata.hpp"

namespace mintime {

enum class SortPolicy { size_based, frequency_based, random };

SortPolicy parse_sort_policy(const std::string& s);

struct AssemblyConfig {
  int sequence_length = 16;   // N
  int max_identities = 2;     // 0 = unlimited
  SortPolicy sorting = SortPolicy::size_based;
  uint64_t seed = 0;
  int64_t epoch = 0;
};

struct Slot {
  bool valid = false;
  int identity_id = -1;
  int64_t frame_index = -1;
  int size_bin = -1;
  double ratio = 0.0;
  std::string feature_ref;  // empty for PAD
};

struct InputSequence {
  std::string video_id;
  Label label = Label::pristine;
  std::optional<int> manipulated_identity;
  std::string anomaly_class;
  std::vector<Slot> slots;

  int valid_count() const;
  std::vector<int> identities() const;  // distinct ids in slot order
};

// Identity ordering for sequence construction: descending mean face area
// (size_based), descending face count (frequency_based) or a seeded shuffle;
// ties keep ascending identity_id.
std::vector<const IdentityTrack*> sort_identities(const std::vector<IdentityTrack>& tracks,
                                                  SortPolicy policy, uint64_t seed);

// Slot quotas for the kept identities: floor(N/k) each, remainder granted
// one-by-one in order, then identities short of faces release their surplus
// to the next identity able to absorb it, iterated to a fixpoint.
std::vector<int> allocate_slots(const std::vector<int64_t>& available, int sequence_length,
                                int max_identities);

// Evenly spaced index selection with a phase offset in [0, stride);
// available <= quota returns everything.
std::vector<int64_t> uniform_indices(int64_t available, int quota, double phase);

// Per-epoch sampling of one track; the phase is derived from
// (seed, epoch, video, identity) so epochs see different selections.
std::vector<const FaceRecord*> uniform_sample(const IdentityTrack& track, int quota,
                                              uint64_t seed, int64_t epoch,
                                              const std::string& video_id);

InputSequence assemble(const VideoRecord& video, const AssemblyConfig& cfg);

// Sequence file: "MNSQ" header {version, N, crop dims, source directory},
// then per-slot records for each assembled sequence.
void save_sequences(const std::string& path, const std::vector<InputSequence>& sequences,
                    int sequence_length, const int64_t crop_shape[3],
                    const std::string& source_dir);

struct SequenceFile {
  int sequence_length = 0;
  int64_t crop_shape[3] = {0, 0, 0};
  std::string source_dir;
  std::vector<InputSequence> sequences;
};

SequenceFile load_sequences(const std::string& path);

}  // namespace mintime
