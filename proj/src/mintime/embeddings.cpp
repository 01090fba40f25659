#include "mintime/embeddings.hpp"

#include <cmath>

#include "mintime/errors.hpp"
#include "mintime/rng.hpp"

namespace mintime {

std::vector<int64_t> tcpe_ids(int64_t frame_index, int tokens_per_face) {
  if (frame_index < 0) throw DataError("tcpe_ids: frame index must be >= 0");
  if (tokens_per_face < 1) throw ConfigError("tcpe_ids: tokens per face must be >= 1");
  std::vector<int64_t> ids(static_cast<size_t>(tokens_per_face));
  for (int t = 0; t < tokens_per_face; ++t)
    ids[static_cast<size_t>(t)] = frame_index * tokens_per_face + 1 + t;
  return ids;
}

int size_bin(double area_ratio) {
  if (!(area_ratio > 0.0 && area_ratio <= 1.0))
    throw DataError("size_bin: area ratio " + std::to_string(area_ratio) + " outside (0,1]");
  const int bin = static_cast<int>(std::floor(100.0 * area_ratio / 5.0));
  return bin >= kSizeBins ? kSizeBins - 1 : bin;
}

EmbeddingTables make_embedding_tables(ParamStore& store, int dim, int tokens_per_face,
                                      int64_t max_frames, uint64_t seed) {
  if (dim < 1 || tokens_per_face < 1 || max_frames < 1)
    throw ConfigError("embedding tables need positive dim, tokens per face and max frames");
  EmbeddingTables tables;
  tables.tokens_per_face = tokens_per_face;
  tables.max_frames = max_frames;
  Rng te_rng(derive_seed(seed, "init.TE"));
  Tensor te({max_frames * tokens_per_face + 1, dim});
  for (int64_t i = 0; i < te.numel(); ++i) te[i] = te_rng.normal(0.0, 0.02);
  Rng se_rng(derive_seed(seed, "init.SE"));
  Tensor se({kSizeBins, dim});
  for (int64_t i = 0; i < se.numel(); ++i) se[i] = se_rng.normal(0.0, 0.02);
  tables.te = &store.create("TE", std::move(te));
  tables.se = &store.create("SE", std::move(se));
  return tables;
}

int embed_tokens(Graph& g, int tokens, const EmbeddingTables& tables,
                 const std::vector<int64_t>& te_ids, const std::vector<int64_t>& se_ids) {
  const Tensor& tok = g.value(tokens);
  if (tok.rank() != 2) throw ShapeError("embed_tokens: tokens must be rank 2");
  const auto rows = static_cast<size_t>(tok.rows());
  if (te_ids.size() != rows || se_ids.size() != rows)
    throw ShapeError("embed_tokens: one id per token row required");
  for (int64_t id : te_ids)
    if (id >= tables.te_rows())
      throw DataError("tcpe id " + std::to_string(id) + " exceeds table capacity " +
                      std::to_string(tables.te_rows()) +
                      " (frame index beyond model.max_frames)");
  for (int64_t id : se_ids)
    if (id >= kSizeBins) throw DataError("size bin out of range");
  const int te_node = g.param(*tables.te);
  const int se_node = g.param(*tables.se);
  return g.add(g.add(tokens, g.gather_rows(te_node, te_ids)),
               g.gather_rows(se_node, se_ids));
}

}  // namespace mintime
