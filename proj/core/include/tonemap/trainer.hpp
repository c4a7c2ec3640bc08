#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tonemap/dataset.hpp"
#include "tonemap/losses.hpp"
#include "tonemap/model.hpp"
#include "tonemap/optim.hpp"

namespace tonemap {

struct TrainConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double weight_decay = 1e-4;
  double eps = 1e-8;
  bool cosine_decay = false;
  int batch_size = 4;
  int crop_size = 64;
  int64_t max_steps = 1000;
  bool horizontal_flip = true;
  bool background_loader = false;
  LossWeights loss;
  uint64_t seed = 1;
  ModelConfig model;

  std::string data_dir;
  std::string checkpoint_path;
  std::string log_path;
  int64_t log_every = 10;
  int64_t checkpoint_every = 0;  // 0: only at the end

  void validate() const;
  AdamWConfig adamw() const;
  // Learning-rate multiplier for 0-based `step`.
  double lr_scale(int64_t step) const;

  // Keys mirror the field names (model fields without prefix, loss weights
  // as alpha/beta/gamma/eta). Unknown keys raise ConfigError.
  static TrainConfig from_map(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> to_map() const;
};

struct StepResult {
  int64_t step = 0;
  double loss = 0;
  double reconstruction = 0;
  double ssim = 0;
  double high_frequency = 0;
  double perceptual = 0;
  double grad_norm = 0;
  double psnr = 0;  // clamped pre-update output against the batch target
};

// One forward, one backward and one AdamW update. The returned loss is the
// pre-update value. A non-finite loss or gradient raises NumericError naming
// `step` and leaves parameters untouched.
StepResult train_step(Model<float>& model, OptimState<float>& optim, const Batch& batch, const TrainConfig& config,
                      int64_t step, const FeatureExtractor<float>& extractor);

// Forward only; loss parts and PSNR.
StepResult evaluate_batch(const Model<float>& model, const Batch& batch, const TrainConfig& config,
                          const FeatureExtractor<float>& extractor);

struct OverfitResult {
  std::vector<double> psnr;  // pre-update PSNR at every step
  std::vector<double> loss;
  int64_t steps = 0;
  bool reached = false;
  double final_psnr = 0;  // after the last update
};

// Trains on one pair until the clamped output reaches `target_psnr` or
// config.max_steps updates have been made.
OverfitResult overfit_single_pair(Model<float>& model, const Tensorf& x, const Tensorf& y, const TrainConfig& config,
                                  double target_psnr = 35.0);

using StepLogger = std::function<void(const StepResult&)>;

struct TrainSummary {
  int64_t steps = 0;
  double final_loss = 0;
  double probe_psnr = 0;
  int64_t parameter_count = 0;
};

// Full loop over the dataset in config.data_dir; the first pair of the
// shuffled index is held out as the probe. Writes line-delimited JSON records
// to config.log_path when set and the checkpoint to config.checkpoint_path.
TrainSummary train(const TrainConfig& config, const StepLogger& logger = {});

// Clamped-output PSNR of the model on a full pair (any size).
double pair_psnr(const Model<float>& model, const Tensorf& x, const Tensorf& y);

std::string step_record_json(const StepResult& r);

}  // namespace tonemap
