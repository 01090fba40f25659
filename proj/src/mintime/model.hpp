#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mintime/assembler.hpp"
#include "mintime/autodiff.hpp"
#include "mintime/embeddings.hpp"
#include "mintime/trackdata.hpp"

namespace mintime {

struct ModelConfig {
  int dim = 64;
  int depth = 2;
  int heads = 4;
  int crop_size = 32;
  int feature_grid = 4;  // backbone output H' = W'
  int mlp_ratio = 4;
  int64_t max_frames = 64;
  int sequence_length = 16;
  bool spatial_across_identities = false;

  int tokens_per_face() const { return feature_grid * feature_grid; }
  int conv_stages() const;  // log2(crop_size / feature_grid)
  void validate() const;
};

// Convolutional stub mapping a 3 x H x W crop to feature_grid^2 tokens of
// width D: stacked 3x3 stride-2 convolutions with GELU, built on an im2col
// gather so it runs on the same tape as everything else.
class Backbone {
 public:
  Backbone(ParamStore& store, const ModelConfig& cfg, uint64_t seed);

  // crop laid out as [H*W, 3] rows; returns tokens [T, D]
  int forward(Graph& g, int crop) const;

  // pack slice (C,H,W f32) -> [H*W, C] tensor
  static Tensor crop_to_input(const float* chw, int channels, int side);

  struct Stage {
    Parameter* weight = nullptr;  // [in_ch*9, out_ch]
    Parameter* bias = nullptr;    // [out_ch]
    int in_side = 0, out_side = 0, in_ch = 0, out_ch = 0;
    std::vector<int64_t> im2col;  // [out_side^2 x in_ch*9], -1 = zero pad
  };
  const std::vector<Stage>& stages() const { return stages_; }

 private:
  std::vector<Stage> stages_;
};

// Per-identity key mask over the N*T+1 token axis; CLS (row 0) always true.
struct IdentityMask {
  int identity_id = -1;
  std::vector<uint8_t> attendable;
};

struct SlotMeta {
  bool valid = false;
  int identity_id = -1;
  int64_t frame_index = -1;
};

std::vector<IdentityMask> build_identity_masks(const std::vector<SlotMeta>& slots,
                                               int tokens_per_face);

struct AttentionParams {
  Parameter *wq = nullptr, *wk = nullptr, *wv = nullptr, *wo = nullptr;
  Parameter *bq = nullptr, *bk = nullptr, *bv = nullptr, *bo = nullptr;
};

// One query group: rows attending through a shared key mask.
struct AttnGroup {
  std::vector<int64_t> queries;
  std::vector<uint8_t> key_mask;
};

// Multi-head attention over x ([S, D]) restricted by per-group key masks.
// Rows outside every group (PAD) come back as zeros. When cls_attention is
// given it receives the head-averaged softmax row of the query-row-0 group.
int grouped_attention(Graph& g, int x, const AttentionParams& p, int heads,
                      const std::vector<AttnGroup>& groups,
                      std::vector<double>* cls_attention = nullptr);

// Identity-aware temporal attention (the Eq-style masking step): queries of
// identity i see only identity-i tokens at the same spatial position plus
// CLS; the CLS query sees every valid token.
int identity_attention(Graph& g, int x, const AttentionParams& p, int heads,
                       const std::vector<SlotMeta>& slots, int tokens_per_face,
                       std::vector<double>* cls_attention = nullptr);

// Spatial attention companion: queries see their own face's tokens plus CLS
// (or all same-frame tokens when across_identities is set).
int spatial_attention(Graph& g, int x, const AttentionParams& p, int heads,
                      const std::vector<SlotMeta>& slots, int tokens_per_face,
                      bool across_identities);

// Per-slot model input; crop tensors already in [H*W, 3] layout.
struct ModelInput {
  struct SlotData {
    bool valid = false;
    int identity_id = -1;
    int64_t frame_index = -1;
    int size_bin = -1;
    Tensor crop;
  };
  std::vector<SlotData> slots;
  Label label = Label::pristine;
  std::string video_id;

  std::vector<SlotMeta> metas() const;
};

struct AttentionReport {
  std::vector<double> slot_values;  // softmax-scaled CLS attention per slot, 0 for PAD
  std::vector<int> slot_identity;   // -1 for PAD
  std::vector<int64_t> slot_frame;
};

struct InferenceResult {
  double logit = 0.0;
  double score = 0.0;  // sigmoid(logit), probability of fake
  AttentionReport attention;
};

class MintimeModel {
 public:
  MintimeModel(const ModelConfig& cfg, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  // Builds the forward pass on g; returns the logit node and fills the
  // attention report from the last block's temporal CLS row.
  int forward(Graph& g, const ModelInput& input, AttentionReport* report = nullptr) const;

  InferenceResult infer(const ModelInput& input) const;

  void save(const std::string& dir) const;
  static MintimeModel load(const std::string& dir);

 private:
  struct Block {
    Parameter *ln_t_gain, *ln_t_bias, *ln_s_gain, *ln_s_bias, *ln_m_gain, *ln_m_bias;
    AttentionParams temporal, spatial;
    Parameter *mlp_w1, *mlp_b1, *mlp_w2, *mlp_b2;
  };

  void build_params(uint64_t seed);

  ModelConfig cfg_;
  ParamStore store_;
  std::unique_ptr<Backbone> backbone_;
  EmbeddingTables tables_;
  Parameter* cls_ = nullptr;
  std::vector<Block> blocks_;
  Parameter *ln_f_gain_ = nullptr, *ln_f_bias_ = nullptr;
  Parameter *head_w1_ = nullptr, *head_b1_ = nullptr, *head_w2_ = nullptr, *head_b2_ = nullptr;
};

// SGD with weight decay under a cosine learning-rate schedule.
class Trainer {
 public:
  Trainer(MintimeModel& model, double lr_max, double lr_min, double weight_decay,
          int64_t total_steps);

  double lr_at(int64_t step) const;
  int64_t step_count() const { return step_; }

  // One SGD step over the batch; gradients reduce in batch order so the
  // result does not depend on the worker count. Returns the mean loss.
  double train_step(const std::vector<const ModelInput*>& batch, int jobs);

 private:
  MintimeModel& model_;
  double lr_max_, lr_min_, weight_decay_;
  int64_t total_steps_;
  int64_t step_ = 0;
};

}  // namespace mintime
