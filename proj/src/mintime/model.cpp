#include "mintime/model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mintime/errors.hpp"
#include "mintime/parallel.hpp"
#include "mintime/rng.hpp"

namespace mintime {

namespace fs = std::filesystem;

int ModelConfig::conv_stages() const {
  int ratio = crop_size / feature_grid;
  int stages = 0;
  while (ratio > 1) {
    if (ratio % 2 != 0) return -1;
    ratio /= 2;
    ++stages;
  }
  return stages;
}

void ModelConfig::validate() const {
  if (dim < 1 || depth < 1 || heads < 1 || mlp_ratio < 1 || sequence_length < 1 ||
      feature_grid < 1 || max_frames < 1)
    throw ConfigError("model config values must be positive");
  if (dim % heads != 0) throw ConfigError("model.dim must be divisible by model.heads");
  if (crop_size % feature_grid != 0 || conv_stages() < 1)
    throw ConfigError("model.crop_size must be feature_grid * 2^k with k >= 1");
}

// ---------------------------------------------------------------------------
// Backbone

Backbone::Backbone(ParamStore& store, const ModelConfig& cfg, uint64_t seed) {
  const int stages = cfg.conv_stages();
  int side = cfg.crop_size;
  int in_ch = 3;
  for (int s = 0; s < stages; ++s) {
    Stage stage;
    stage.in_side = side;
    stage.out_side = side / 2;
    stage.in_ch = in_ch;
    stage.out_ch = s == stages - 1 ? cfg.dim : std::max(8, cfg.dim >> (stages - 1 - s));
    const std::string name = "backbone.conv" + std::to_string(s);
    Rng rng(derive_seed(seed, "init." + name));
    const double sigma = std::sqrt(2.0 / (9.0 * stage.in_ch));
    Tensor w({static_cast<int64_t>(stage.in_ch) * 9, stage.out_ch});
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = rng.normal(0.0, sigma);
    stage.weight = &store.create(name + ".weight", std::move(w));
    stage.bias = &store.create(name + ".bias", Tensor({stage.out_ch}), /*decay=*/false);

    // im2col over [H*W, C] layout: 3x3 kernel, stride 2, pad 1; -1 = zero.
    stage.im2col.resize(static_cast<size_t>(stage.out_side) * stage.out_side * stage.in_ch * 9);
    size_t at = 0;
    for (int oy = 0; oy < stage.out_side; ++oy) {
      for (int ox = 0; ox < stage.out_side; ++ox) {
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            const int iy = oy * 2 - 1 + ky;
            const int ix = ox * 2 - 1 + kx;
            for (int c = 0; c < stage.in_ch; ++c) {
              if (iy < 0 || iy >= stage.in_side || ix < 0 || ix >= stage.in_side)
                stage.im2col[at++] = -1;
              else
                stage.im2col[at++] =
                    (static_cast<int64_t>(iy) * stage.in_side + ix) * stage.in_ch + c;
            }
          }
        }
      }
    }
    stages_.push_back(std::move(stage));
    side /= 2;
    in_ch = stage.out_ch;
  }
}

int Backbone::forward(Graph& g, int crop) const {
  const Tensor& in = g.value(crop);
  if (in.rank() != 2 || in.rows() != stages_.front().in_side * stages_.front().in_side ||
      in.cols() != stages_.front().in_ch)
    throw ShapeError("backbone: crop shape " + in.shape_str() + " does not match config");
  int x = crop;
  for (const Stage& stage : stages_) {
    const int patches = g.gather(
        x, stage.im2col,
        {static_cast<int64_t>(stage.out_side) * stage.out_side,
         static_cast<int64_t>(stage.in_ch) * 9});
    const int z = g.add_rowvec(g.matmul(patches, g.param(*stage.weight)), g.param(*stage.bias));
    x = g.gelu(z);
  }
  return x;  // [T, D], raster order
}

Tensor Backbone::crop_to_input(const float* chw, int channels, int side) {
  Tensor t({static_cast<int64_t>(side) * side, channels});
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        t.at(static_cast<int64_t>(y) * side + x, c) =
            static_cast<double>(chw[(static_cast<size_t>(c) * side + y) * side + x]);
  return t;
}

// ---------------------------------------------------------------------------
// Attention

std::vector<IdentityMask> build_identity_masks(const std::vector<SlotMeta>& slots,
                                               int tokens_per_face) {
  const int64_t total = static_cast<int64_t>(slots.size()) * tokens_per_face + 1;
  std::vector<IdentityMask> masks;
  for (size_t n = 0; n < slots.size(); ++n) {
    if (!slots[n].valid) continue;
    IdentityMask* mask = nullptr;
    for (auto& m : masks)
      if (m.identity_id == slots[n].identity_id) mask = &m;
    if (!mask) {
      masks.push_back({slots[n].identity_id,
                       std::vector<uint8_t>(static_cast<size_t>(total), 0)});
      mask = &masks.back();
      mask->attendable[0] = 1;  // CLS
    }
    for (int p = 0; p < tokens_per_face; ++p)
      mask->attendable[1 + n * static_cast<size_t>(tokens_per_face) + static_cast<size_t>(p)] = 1;
  }
  return masks;
}

int grouped_attention(Graph& g, int x, const AttentionParams& p, int heads,
                      const std::vector<AttnGroup>& groups,
                      std::vector<double>* cls_attention) {
  const Tensor& xv = g.value(x);
  const int64_t S = xv.rows();
  const int64_t D = xv.cols();
  if (D % heads != 0) throw ConfigError("attention width not divisible by heads");
  const int64_t dh = D / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  const int q = g.add_rowvec(g.matmul(x, g.param(*p.wq)), g.param(*p.bq));
  const int k = g.add_rowvec(g.matmul(x, g.param(*p.wk)), g.param(*p.bk));
  const int v = g.add_rowvec(g.matmul(x, g.param(*p.wv)), g.param(*p.bv));

  std::vector<int> kt_h(static_cast<size_t>(heads)), vh(static_cast<size_t>(heads)),
      qh(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    qh[static_cast<size_t>(h)] = g.slice_cols(q, h * dh, dh);
    kt_h[static_cast<size_t>(h)] = g.transpose(g.slice_cols(k, h * dh, dh));
    vh[static_cast<size_t>(h)] = g.slice_cols(v, h * dh, dh);
  }

  if (cls_attention) cls_attention->assign(static_cast<size_t>(S), 0.0);

  std::vector<int> group_outputs;
  std::vector<int64_t> row_order;
  for (const AttnGroup& group : groups) {
    if (group.queries.empty()) continue;
    std::vector<int> heads_out;
    const bool is_cls_group = group.queries.size() == 1 && group.queries[0] == 0;
    for (int h = 0; h < heads; ++h) {
      const int qg = g.gather_rows(qh[static_cast<size_t>(h)], group.queries);
      const int scores = g.scale(g.matmul(qg, kt_h[static_cast<size_t>(h)]), scale);
      const int attn = g.masked_softmax(scores, group.key_mask);
      if (cls_attention && is_cls_group) {
        const Tensor& a = g.value(attn);
        for (int64_t j = 0; j < S; ++j)
          (*cls_attention)[static_cast<size_t>(j)] += a.at(0, j) / heads;
      }
      heads_out.push_back(g.matmul(attn, vh[static_cast<size_t>(h)]));
    }
    group_outputs.push_back(g.concat_cols(heads_out));
    row_order.insert(row_order.end(), group.queries.begin(), group.queries.end());
  }
  if (group_outputs.empty()) throw NumericError("attention: no query groups");

  const int stacked = g.concat_rows(group_outputs);
  std::vector<int64_t> inverse(static_cast<size_t>(S), -1);
  for (size_t pos = 0; pos < row_order.size(); ++pos) {
    const int64_t row = row_order[pos];
    if (inverse[static_cast<size_t>(row)] != -1)
      throw NumericError("attention: query groups overlap");
    inverse[static_cast<size_t>(row)] = static_cast<int64_t>(pos);
  }
  const int scattered = g.gather_rows(stacked, inverse);
  return g.add_rowvec(g.matmul(scattered, g.param(*p.wo)), g.param(*p.bo));
}

namespace {

std::vector<uint8_t> all_valid_mask(const std::vector<SlotMeta>& slots, int T) {
  std::vector<uint8_t> mask(slots.size() * static_cast<size_t>(T) + 1, 0);
  mask[0] = 1;
  for (size_t n = 0; n < slots.size(); ++n)
    if (slots[n].valid)
      for (int p = 0; p < T; ++p) mask[1 + n * static_cast<size_t>(T) + static_cast<size_t>(p)] = 1;
  return mask;
}

}  // namespace

int identity_attention(Graph& g, int x, const AttentionParams& p, int heads,
                       const std::vector<SlotMeta>& slots, int tokens_per_face,
                       std::vector<double>* cls_attention) {
  const int T = tokens_per_face;
  std::vector<AttnGroup> groups;
  groups.push_back({{0}, all_valid_mask(slots, T)});  // global CLS sees everything

  std::vector<int> identities;
  for (const auto& s : slots)
    if (s.valid && std::find(identities.begin(), identities.end(), s.identity_id) ==
                       identities.end())
      identities.push_back(s.identity_id);

  for (int id : identities) {
    for (int pos = 0; pos < T; ++pos) {
      AttnGroup group;
      group.key_mask.assign(slots.size() * static_cast<size_t>(T) + 1, 0);
      group.key_mask[0] = 1;  // CLS key is always attendable
      for (size_t n = 0; n < slots.size(); ++n) {
        if (!slots[n].valid || slots[n].identity_id != id) continue;
        const int64_t row = 1 + static_cast<int64_t>(n) * T + pos;
        group.queries.push_back(row);
        group.key_mask[static_cast<size_t>(row)] = 1;
      }
      groups.push_back(std::move(group));
    }
  }
  return grouped_attention(g, x, p, heads, groups, cls_attention);
}

int spatial_attention(Graph& g, int x, const AttentionParams& p, int heads,
                      const std::vector<SlotMeta>& slots, int tokens_per_face,
                      bool across_identities) {
  const int T = tokens_per_face;
  std::vector<AttnGroup> groups;
  groups.push_back({{0}, all_valid_mask(slots, T)});

  if (across_identities) {
    std::vector<int64_t> frames;
    for (const auto& s : slots)
      if (s.valid && std::find(frames.begin(), frames.end(), s.frame_index) == frames.end())
        frames.push_back(s.frame_index);
    for (int64_t f : frames) {
      AttnGroup group;
      group.key_mask.assign(slots.size() * static_cast<size_t>(T) + 1, 0);
      group.key_mask[0] = 1;
      for (size_t n = 0; n < slots.size(); ++n) {
        if (!slots[n].valid || slots[n].frame_index != f) continue;
        for (int pos = 0; pos < T; ++pos) {
          const int64_t row = 1 + static_cast<int64_t>(n) * T + pos;
          group.queries.push_back(row);
          group.key_mask[static_cast<size_t>(row)] = 1;
        }
      }
      groups.push_back(std::move(group));
    }
  } else {
    for (size_t n = 0; n < slots.size(); ++n) {
      if (!slots[n].valid) continue;
      AttnGroup group;
      group.key_mask.assign(slots.size() * static_cast<size_t>(T) + 1, 0);
      group.key_mask[0] = 1;
      for (int pos = 0; pos < T; ++pos) {
        const int64_t row = 1 + static_cast<int64_t>(n) * T + pos;
        group.queries.push_back(row);
        group.key_mask[static_cast<size_t>(row)] = 1;
      }
      groups.push_back(std::move(group));
    }
  }
  return grouped_attention(g, x, p, heads, groups, nullptr);
}

// ---------------------------------------------------------------------------
// Model

std::vector<SlotMeta> ModelInput::metas() const {
  std::vector<SlotMeta> out;
  out.reserve(slots.size());
  for (const auto& s : slots) out.push_back({s.valid, s.identity_id, s.frame_index});
  return out;
}

MintimeModel::MintimeModel(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  build_params(seed);
}

void MintimeModel::build_params(uint64_t seed) {
  const int D = cfg_.dim;
  auto normal_tensor = [&](const std::string& name, std::vector<int64_t> shape, double sigma) {
    Rng rng(derive_seed(seed, "init." + name));
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, sigma);
    return t;
  };

  cls_ = &store_.create("cls", normal_tensor("cls", {1, D}, 0.02));
  tables_ = make_embedding_tables(store_, D, cfg_.tokens_per_face(), cfg_.max_frames, seed);
  backbone_ = std::make_unique<Backbone>(store_, cfg_, seed);

  auto make_attention = [&](const std::string& prefix) {
    AttentionParams p;
    p.wq = &store_.create(prefix + ".wq", normal_tensor(prefix + ".wq", {D, D}, 0.02));
    p.bq = &store_.create(prefix + ".bq", Tensor({D}), false);
    p.wk = &store_.create(prefix + ".wk", normal_tensor(prefix + ".wk", {D, D}, 0.02));
    p.bk = &store_.create(prefix + ".bk", Tensor({D}), false);
    p.wv = &store_.create(prefix + ".wv", normal_tensor(prefix + ".wv", {D, D}, 0.02));
    p.bv = &store_.create(prefix + ".bv", Tensor({D}), false);
    p.wo = &store_.create(prefix + ".wo", normal_tensor(prefix + ".wo", {D, D}, 0.02));
    p.bo = &store_.create(prefix + ".bo", Tensor({D}), false);
    return p;
  };
  auto make_ln = [&](const std::string& prefix, Parameter*& gain, Parameter*& bias) {
    gain = &store_.create(prefix + ".gain", Tensor::full({D}, 1.0), false);
    bias = &store_.create(prefix + ".bias", Tensor({D}), false);
  };

  for (int b = 0; b < cfg_.depth; ++b) {
    const std::string prefix = "block" + std::to_string(b);
    Block block{};
    make_ln(prefix + ".ln_t", block.ln_t_gain, block.ln_t_bias);
    block.temporal = make_attention(prefix + ".temporal");
    make_ln(prefix + ".ln_s", block.ln_s_gain, block.ln_s_bias);
    block.spatial = make_attention(prefix + ".spatial");
    make_ln(prefix + ".ln_m", block.ln_m_gain, block.ln_m_bias);
    const int64_t hidden = static_cast<int64_t>(cfg_.mlp_ratio) * D;
    block.mlp_w1 = &store_.create(prefix + ".mlp.w1",
                                  normal_tensor(prefix + ".mlp.w1", {D, hidden}, 0.02));
    block.mlp_b1 = &store_.create(prefix + ".mlp.b1", Tensor({hidden}), false);
    block.mlp_w2 = &store_.create(prefix + ".mlp.w2",
                                  normal_tensor(prefix + ".mlp.w2", {hidden, D}, 0.02));
    block.mlp_b2 = &store_.create(prefix + ".mlp.b2", Tensor({D}), false);
    blocks_.push_back(block);
  }

  make_ln("final.ln", ln_f_gain_, ln_f_bias_);
  const int64_t head_hidden = std::max(4, D / 2);
  head_w1_ = &store_.create("head.w1", normal_tensor("head.w1", {D, head_hidden}, 0.02));
  head_b1_ = &store_.create("head.b1", Tensor({head_hidden}), false);
  head_w2_ = &store_.create("head.w2", normal_tensor("head.w2", {head_hidden, 1}, 0.02));
  head_b2_ = &store_.create("head.b2", Tensor({1}), false);
}

int MintimeModel::forward(Graph& g, const ModelInput& input, AttentionReport* report) const {
  const int N = cfg_.sequence_length;
  const int T = cfg_.tokens_per_face();
  const int D = cfg_.dim;
  if (static_cast<int>(input.slots.size()) != N)
    throw ShapeError("forward: expected " + std::to_string(N) + " slots, got " +
                     std::to_string(input.slots.size()));
  int valid = 0;
  for (const auto& s : input.slots) valid += s.valid ? 1 : 0;
  if (valid == 0) throw DataError("forward: sequence has no valid slots");

  // Tokens: CLS first, then T rows per slot; PAD slots contribute zero rows
  // and are excluded from attention by the masks, never by their contents.
  const int cls_node = g.param(*cls_);
  std::vector<int> parts{cls_node};
  int pad_node = -1;
  for (const auto& slot : input.slots) {
    if (slot.valid) {
      const Tensor& crop = slot.crop;
      if (crop.rank() != 2 || crop.rows() != static_cast<int64_t>(cfg_.crop_size) * cfg_.crop_size ||
          crop.cols() != 3)
        throw ShapeError("forward: crop tensor has shape " + crop.shape_str());
      if (slot.frame_index < 0 || slot.frame_index >= cfg_.max_frames)
        throw DataError("forward: frame index " + std::to_string(slot.frame_index) +
                        " outside [0, model.max_frames)");
      parts.push_back(backbone_->forward(g, g.input(crop)));
    } else {
      if (pad_node < 0) pad_node = g.input(Tensor({T, D}));
      parts.push_back(pad_node);
    }
  }
  int x = g.concat_rows(parts);

  std::vector<int64_t> te_ids{0}, se_ids{-1};
  for (const auto& slot : input.slots) {
    for (int p = 0; p < T; ++p) {
      te_ids.push_back(slot.valid ? slot.frame_index * T + 1 + p : -1);
      se_ids.push_back(slot.valid ? slot.size_bin : -1);
    }
  }
  x = embed_tokens(g, x, tables_, te_ids, se_ids);

  const std::vector<SlotMeta> metas = input.metas();
  std::vector<double> cls_attention;
  for (size_t b = 0; b < blocks_.size(); ++b) {
    const Block& blk = blocks_[b];
    const bool last = b + 1 == blocks_.size();
    const int t_in = g.layer_norm(x, g.param(*blk.ln_t_gain), g.param(*blk.ln_t_bias));
    x = g.add(x, identity_attention(g, t_in, blk.temporal, cfg_.heads, metas, T,
                                    last && report ? &cls_attention : nullptr));
    const int s_in = g.layer_norm(x, g.param(*blk.ln_s_gain), g.param(*blk.ln_s_bias));
    x = g.add(x, spatial_attention(g, s_in, blk.spatial, cfg_.heads, metas, T,
                                   cfg_.spatial_across_identities));
    const int m_in = g.layer_norm(x, g.param(*blk.ln_m_gain), g.param(*blk.ln_m_bias));
    const int h = g.gelu(g.add_rowvec(g.matmul(m_in, g.param(*blk.mlp_w1)), g.param(*blk.mlp_b1)));
    x = g.add(x, g.add_rowvec(g.matmul(h, g.param(*blk.mlp_w2)), g.param(*blk.mlp_b2)));
  }

  x = g.layer_norm(x, g.param(*ln_f_gain_), g.param(*ln_f_bias_));
  const int cls_out = g.gather_rows(x, {0});
  const int h = g.gelu(g.add_rowvec(g.matmul(cls_out, g.param(*head_w1_)), g.param(*head_b1_)));
  const int logit = g.add_rowvec(g.matmul(h, g.param(*head_w2_)), g.param(*head_b2_));

  if (report) {
    report->slot_values.assign(input.slots.size(), 0.0);
    report->slot_identity.assign(input.slots.size(), -1);
    report->slot_frame.assign(input.slots.size(), -1);
    for (size_t n = 0; n < input.slots.size(); ++n) {
      if (!input.slots[n].valid) continue;
      double sum = 0.0;
      for (int p = 0; p < T; ++p)
        sum += cls_attention[1 + n * static_cast<size_t>(T) + static_cast<size_t>(p)];
      report->slot_values[n] = sum;
      report->slot_identity[n] = input.slots[n].identity_id;
      report->slot_frame[n] = input.slots[n].frame_index;
    }
  }
  return logit;
}

InferenceResult MintimeModel::infer(const ModelInput& input) const {
  Graph g;
  g.set_param_accumulation(false);
  InferenceResult result;
  const int logit = forward(g, input, &result.attention);
  result.logit = g.value(logit)[0];
  result.score = detail::sigmoid_scalar(result.logit);
  return result;
}

void MintimeModel::save(const std::string& dir) const {
  fs::create_directories(dir);
  std::ofstream os(fs::path(dir) / "config.txt");
  if (!os) throw DataError("cannot write checkpoint config: " + dir);
  os << "dim=" << cfg_.dim << "\n"
     << "depth=" << cfg_.depth << "\n"
     << "heads=" << cfg_.heads << "\n"
     << "crop_size=" << cfg_.crop_size << "\n"
     << "feature_grid=" << cfg_.feature_grid << "\n"
     << "mlp_ratio=" << cfg_.mlp_ratio << "\n"
     << "max_frames=" << cfg_.max_frames << "\n"
     << "sequence_length=" << cfg_.sequence_length << "\n"
     << "spatial_across_identities=" << (cfg_.spatial_across_identities ? 1 : 0) << "\n";
  os.close();
  for (const Parameter* p : store_.all())
    save_tensor_file((fs::path(dir) / (p->name + ".mnt")).string(), p->value);
}

MintimeModel MintimeModel::load(const std::string& dir) {
  std::ifstream is(fs::path(dir) / "config.txt");
  if (!is) throw ConfigError("cannot open checkpoint config in " + dir);
  ModelConfig cfg;
  std::string line;
  std::map<std::string, std::string> kv;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto want = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError(std::string("checkpoint config misses ") + key);
    return std::stoll(it->second);
  };
  cfg.dim = static_cast<int>(want("dim"));
  cfg.depth = static_cast<int>(want("depth"));
  cfg.heads = static_cast<int>(want("heads"));
  cfg.crop_size = static_cast<int>(want("crop_size"));
  cfg.feature_grid = static_cast<int>(want("feature_grid"));
  cfg.mlp_ratio = static_cast<int>(want("mlp_ratio"));
  cfg.max_frames = want("max_frames");
  cfg.sequence_length = static_cast<int>(want("sequence_length"));
  cfg.spatial_across_identities = want("spatial_across_identities") != 0;

  MintimeModel model(cfg, /*seed=*/0);
  for (Parameter* p : model.store_.all()) {
    const std::string path = (fs::path(dir) / (p->name + ".mnt")).string();
    Tensor t = load_tensor_file(path);
    if (!t.same_shape(p->value))
      throw DataError("checkpoint tensor " + p->name + " has shape " + t.shape_str() +
                      ", expected " + p->value.shape_str());
    p->value = std::move(t);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(MintimeModel& model, double lr_max, double lr_min, double weight_decay,
                 int64_t total_steps)
    : model_(model),
      lr_max_(lr_max),
      lr_min_(lr_min),
      weight_decay_(weight_decay),
      total_steps_(std::max<int64_t>(1, total_steps)) {}

double Trainer::lr_at(int64_t step) const {
  const double t = std::min<double>(1.0, static_cast<double>(step) /
                                             static_cast<double>(total_steps_));
  return lr_min_ + 0.5 * (lr_max_ - lr_min_) * (1.0 + std::cos(3.14159265358979323846 * t));
}

double Trainer::train_step(const std::vector<const ModelInput*>& batch, int jobs) {
  if (batch.empty()) throw ConfigError("train_step: empty batch");
  const double lr = lr_at(step_);
  const size_t B = batch.size();

  struct ItemResult {
    double loss = 0.0;
    std::vector<std::pair<Parameter*, Tensor>> grads;
  };
  std::vector<ItemResult> items(B);

  parallel_for(static_cast<int64_t>(B), jobs, [&](int64_t i) {
    const ModelInput& input = *batch[static_cast<size_t>(i)];
    Graph g;
    g.set_param_accumulation(false);
    const int logit = model_.forward(g, input);
    const double label = input.label == Label::fake ? 1.0 : 0.0;
    const int loss = g.bce_with_logits(logit, label);
    const double loss_value = g.value(loss)[0];
    if (!std::isfinite(loss_value))
      throw NumericError("train_step: non-finite loss on video " + input.video_id +
                         " (logit " + std::to_string(g.value(logit)[0]) + ")");
    g.backward(loss);
    ItemResult& out = items[static_cast<size_t>(i)];
    out.loss = loss_value;
    for (const auto& [param, node] : g.param_bindings())
      out.grads.emplace_back(param, g.grad_of(node));
  });

  // Reduce in batch order: results are identical for any worker count.
  model_.params().zero_grads();
  const double inv_b = 1.0 / static_cast<double>(B);
  double mean_loss = 0.0;
  for (const ItemResult& item : items) {
    mean_loss += item.loss * inv_b;
    for (const auto& [param, grad] : item.grads)
      for (int64_t i = 0; i < grad.numel(); ++i) param->grad[i] += grad[i] * inv_b;
  }

  for (Parameter* p : model_.params().all()) {
    const double wd = p->decay ? weight_decay_ : 0.0;
    for (int64_t i = 0; i < p->value.numel(); ++i)
      p->value[i] -= lr * (p->grad[i] + wd * p->value[i]);
  }
  ++step_;
  return mean_loss;
}

}  // namespace mintime
