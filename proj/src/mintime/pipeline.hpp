#pragma once

#include <map>
#include <mutex>
#include <string>

#include "mintime/assembler.hpp"
#include "mintime/config.hpp"
#include "mintime/model.hpp"
#include "mintime/tensor.hpp"

namespace mintime {

// Resolves "pack.mnt#index" feature refs against a dataset directory and
// memoizes the f32 packs. Thread-safe; shared across eval workers.
class CropStore {
 public:
  explicit CropStore(std::string base_dir) : base_dir_(std::move(base_dir)) {}

  // crop as [H*W, 3] rows, ready for the backbone
  Tensor load(const std::string& feature_ref, int expected_side) const;

 private:
  const TensorF32& pack(const std::string& rel_path) const;

  std::string base_dir_;
  mutable std::mutex mu_;
  mutable std::map<std::string, TensorF32> packs_;
};

ModelInput to_model_input(const InputSequence& seq, const CropStore& crops,
                          const ModelConfig& cfg);

namespace pipeline {

void run_synth(const RunConfig& cfg, const std::string& out_dir);
void run_cluster(const RunConfig& cfg, const std::string& detections_path,
                 const std::string& out_manifest);
void run_assemble(const RunConfig& cfg, const std::string& manifest_path,
                  const std::string& out_path);
void run_train(const RunConfig& cfg, const std::string& manifest_path,
               const std::string& checkpoint_dir);
void run_infer(const RunConfig& cfg, const std::string& manifest_path,
               const std::string& checkpoint_dir, const std::string& out_json);
// localization_json may be empty to skip the per-video file.
void run_eval(const RunConfig& cfg, const std::string& manifest_path,
              const std::string& checkpoint_dir, const std::string& report_json,
              const std::string& localization_json);
void run_stats(const RunConfig& cfg, const std::string& manifest_path,
               const std::string& out_json);
void run_plot(const RunConfig& cfg, const std::string& scores_json,
              const std::string& out_dir);

}  // namespace pipeline

}  // namespace mintime
