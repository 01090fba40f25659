#pragma once

#include <cstdint>
#include <vector>

#include "mintime/autodiff.hpp"

namespace mintime {

// Token ids for the face at frame `frame_index`: the T consecutive integers
// iT+1 .. (i+1)T, one per feature-map token in raster order. Faces of
// different identities in the same frame share the same ids; id 0 is
// reserved for the CLS token.
std::vector<int64_t> tcpe_ids(int64_t frame_index, int tokens_per_face);

// Area-ratio bin: twenty half-open 5% intervals [5i, 5(i+1)) over percent,
// with s = 1.0 clamped into the top bin.
int size_bin(double area_ratio);

inline constexpr int kSizeBins = 20;

// Learned temporal and size lookup tables. `te` has max_frames*T + 1 rows
// (row 0 belongs to CLS); `se` has 20 rows.
struct EmbeddingTables {
  Parameter* te = nullptr;
  Parameter* se = nullptr;
  int tokens_per_face = 0;
  int64_t max_frames = 0;

  int64_t te_rows() const { return max_frames * tokens_per_face + 1; }
};

// Create the tables in `store`, rows drawn from N(0, 0.02).
EmbeddingTables make_embedding_tables(ParamStore& store, int dim, int tokens_per_face,
                                      int64_t max_frames, uint64_t seed);

// tokens + TE[tcpe id] + SE[size bin], row by row. te_ids/se_ids give one
// index per token row; -1 skips the lookup (PAD rows, CLS size slot).
int embed_tokens(Graph& g, int tokens, const EmbeddingTables& tables,
                 const std::vector<int64_t>& te_ids, const std::vector<int64_t>& se_ids);

}  // namespace mintime
