#include "tonemap/trainer.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "tonemap/checkpoint.hpp"
#include "tonemap/config_file.hpp"
#include "tonemap/errors.hpp"
#include "tonemap/metrics.hpp"

namespace tonemap {
namespace {

Tensorf clamp01(const Tensorf& t) {
  Tensorf out = t;
  for (float& v : out.values()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

StepResult forward_losses(Tape<float>& tape, const Model<float>& model, const Batch& batch, const TrainConfig& config,
                          const FeatureExtractor<float>& extractor, Var<float>* total_out) {
  require_same_shape(batch.x.shape(), batch.y.shape(), "train batch");
  Var<float> x = tape.constant(batch.x);
  PipelineOutputs<float> out = forward_pipeline(tape, x, model);
  LossParts<float> parts = compute_loss_parts(tape, out, batch.y, extractor);
  Var<float> total = total_loss(parts, config.loss);
  StepResult r;
  r.loss = total.value()[0];
  r.reconstruction = parts.reconstruction.value()[0];
  r.ssim = parts.ssim.value()[0];
  r.high_frequency = parts.high_frequency.value()[0];
  r.perceptual = parts.perceptual.value()[0];
  r.psnr = metrics::psnr(clamp01(out.output.value()), batch.y);
  if (total_out != nullptr) *total_out = total;
  return r;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be nonnegative");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (crop_size < 8 || crop_size % 8 != 0) throw ConfigError("crop_size must be a positive multiple of 8");
  if (crop_size < 11) throw ConfigError("crop_size must hold the 11-pixel SSIM window");
  if (max_steps < 0) throw ConfigError("max_steps must be nonnegative");
  if (log_every < 1) throw ConfigError("log_every must be positive");
  loss.validate();
  model.validate();
}

AdamWConfig TrainConfig::adamw() const { return AdamWConfig{lr, beta1, beta2, weight_decay, eps}; }

double TrainConfig::lr_scale(int64_t step) const {
  if (!cosine_decay || max_steps <= 1) return 1.0;
  const double t = std::clamp(static_cast<double>(step) / static_cast<double>(max_steps - 1), 0.0, 1.0);
  return 0.5 * (1.0 + std::cos(M_PI * t));
}

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "lr") c.lr = config_double(k, v);
    else if (k == "beta1") c.beta1 = config_double(k, v);
    else if (k == "beta2") c.beta2 = config_double(k, v);
    else if (k == "weight_decay") c.weight_decay = config_double(k, v);
    else if (k == "eps") c.eps = config_double(k, v);
    else if (k == "cosine_decay") c.cosine_decay = config_bool(k, v);
    else if (k == "batch_size") c.batch_size = static_cast<int>(config_int(k, v));
    else if (k == "crop_size") c.crop_size = static_cast<int>(config_int(k, v));
    else if (k == "max_steps") c.max_steps = config_int(k, v);
    else if (k == "horizontal_flip") c.horizontal_flip = config_bool(k, v);
    else if (k == "background_loader") c.background_loader = config_bool(k, v);
    else if (k == "alpha") c.loss.reconstruction = config_double(k, v);
    else if (k == "beta") c.loss.ssim = config_double(k, v);
    else if (k == "gamma") c.loss.high_frequency = config_double(k, v);
    else if (k == "eta") c.loss.perceptual = config_double(k, v);
    else if (k == "seed") c.seed = c.model.seed = static_cast<uint64_t>(config_int(k, v));
    else if (k == "width") c.model.width = static_cast<int>(config_int(k, v));
    else if (k == "encoder_width") c.model.encoder_width = static_cast<int>(config_int(k, v));
    else if (k == "descriptor_dim") c.model.descriptor_dim = static_cast<int>(config_int(k, v));
    else if (k == "grid") c.model.grid = static_cast<int>(config_int(k, v));
    else if (k == "lut_size") c.model.lut_size = static_cast<int>(config_int(k, v));
    else if (k == "lut_count") c.model.lut_count = static_cast<int>(config_int(k, v));
    else if (k == "residual_output_scale") c.model.residual_output_scale = config_double(k, v);
    else if (k == "data_dir") c.data_dir = v;
    else if (k == "checkpoint_path") c.checkpoint_path = v;
    else if (k == "log_path") c.log_path = v;
    else if (k == "log_every") c.log_every = config_int(k, v);
    else if (k == "checkpoint_every") c.checkpoint_every = config_int(k, v);
    else throw ConfigError("unknown config key '" + k + "'");
  }
  c.validate();
  return c;
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  return {{"lr", num(lr)},
          {"beta1", num(beta1)},
          {"beta2", num(beta2)},
          {"weight_decay", num(weight_decay)},
          {"eps", num(eps)},
          {"cosine_decay", flag(cosine_decay)},
          {"batch_size", std::to_string(batch_size)},
          {"crop_size", std::to_string(crop_size)},
          {"max_steps", std::to_string(max_steps)},
          {"horizontal_flip", flag(horizontal_flip)},
          {"alpha", num(loss.reconstruction)},
          {"beta", num(loss.ssim)},
          {"gamma", num(loss.high_frequency)},
          {"eta", num(loss.perceptual)},
          {"seed", std::to_string(seed)},
          {"width", std::to_string(model.width)},
          {"encoder_width", std::to_string(model.encoder_width)},
          {"descriptor_dim", std::to_string(model.descriptor_dim)},
          {"grid", std::to_string(model.grid)},
          {"lut_size", std::to_string(model.lut_size)},
          {"lut_count", std::to_string(model.lut_count)},
          {"residual_output_scale", num(model.residual_output_scale)}};
}

StepResult train_step(Model<float>& model, OptimState<float>& optim, const Batch& batch, const TrainConfig& config,
                      int64_t step, const FeatureExtractor<float>& extractor) {
  const std::string where = "step " + std::to_string(step) + ": ";
  try {
    Tape<float> tape(&model.params);
    Var<float> total;
    StepResult r = forward_losses(tape, model, batch, config, extractor, &total);
    r.step = step;
    if (!std::isfinite(r.loss)) throw NumericError("non-finite loss");
    model.params.zero_grad();
    tape.backward(total);
    r.grad_norm = model.params.grad_norm();
    if (!std::isfinite(r.grad_norm)) {
      model.params.zero_grad();
      throw NumericError("non-finite gradient");
    }
    adamw_step(optim, model.params, config.lr_scale(step));
    return r;
  } catch (const NumericError& e) {
    throw NumericError(where + e.what());
  }
}

StepResult evaluate_batch(const Model<float>& model, const Batch& batch, const TrainConfig& config,
                          const FeatureExtractor<float>& extractor) {
  Tape<float> tape(const_cast<ParameterSet<float>*>(&model.params));
  return forward_losses(tape, model, batch, config, extractor, nullptr);
}

double pair_psnr(const Model<float>& model, const Tensorf& x, const Tensorf& y) {
  return metrics::psnr(clamp01(run_model(model, x)), y);
}

OverfitResult overfit_single_pair(Model<float>& model, const Tensorf& x, const Tensorf& y, const TrainConfig& config,
                                  double target_psnr) {
  config.validate();
  const Batch batch{x, y};
  OptimState<float> optim(model.params, config.adamw());
  AnalyticFeatureExtractor<float> extractor;
  OverfitResult out;
  for (int64_t step = 0; step < config.max_steps; ++step) {
    const StepResult r = train_step(model, optim, batch, config, step, extractor);
    out.psnr.push_back(r.psnr);
    out.loss.push_back(r.loss);
    out.steps = step + 1;
    if (r.psnr >= target_psnr) {
      out.reached = true;
      break;
    }
  }
  out.final_psnr = pair_psnr(model, x, y);
  if (out.final_psnr >= target_psnr) out.reached = true;
  return out;
}

std::string step_record_json(const StepResult& r) {
  nlohmann::json j = {{"step", r.step},
                      {"loss", r.loss},
                      {"re", r.reconstruction},
                      {"ssim", r.ssim},
                      {"hf", r.high_frequency},
                      {"perceptual", r.perceptual},
                      {"grad_norm", r.grad_norm},
                      {"psnr", r.psnr}};
  return j.dump();
}

TrainSummary train(const TrainConfig& config, const StepLogger& logger) {
  config.validate();
  if (config.data_dir.empty()) throw ConfigError("data_dir is required for training");
  const DatasetIndex index = DatasetIndex::scan(config.data_dir, "train", config.seed);
  const auto order = index.order();
  std::vector<LoadedPair> train_pairs;
  LoadedPair probe;
  for (size_t i = 0; i < order.size(); ++i) {
    LoadedPair p = load_pair(index.pairs[order[i]]);
    if (i == 0 && order.size() > 1) {
      probe = std::move(p);
    } else {
      train_pairs.push_back(std::move(p));
    }
  }
  if (probe.hdr.empty()) probe = train_pairs.front();

  Model<float> model = Model<float>::create(config.model);
  OptimState<float> optim(model.params, config.adamw());
  AnalyticFeatureExtractor<float> extractor;
  SampleOptions sample{config.batch_size, config.crop_size, config.horizontal_flip};
  BatchLoader loader(train_pairs, sample, config.seed ^ 0xba7c4ULL, config.background_loader);

  std::ofstream log;
  if (!config.log_path.empty()) {
    log.open(config.log_path);
    if (!log) throw IoError(config.log_path, "cannot open for writing");
    log << nlohmann::json{{"parameters", model.params.count()}}.dump() << "\n";
  }
  TrainSummary summary;
  summary.parameter_count = model.params.count();
  const auto hyper = config.to_map();
  for (int64_t step = 0; step < config.max_steps; ++step) {
    StepResult r = train_step(model, optim, loader.next(), config, step, extractor);
    const bool last = step + 1 == config.max_steps;
    if (step % config.log_every == 0 || last) {
      r.psnr = pair_psnr(model, probe.hdr, probe.ldr);
      if (log) log << step_record_json(r) << "\n" << std::flush;
      if (logger) logger(r);
    }
    if (!config.checkpoint_path.empty() && config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0) {
      save_checkpoint(config.checkpoint_path, model, hyper, &optim);
    }
    summary.steps = step + 1;
    summary.final_loss = r.loss;
  }
  summary.probe_psnr = pair_psnr(model, probe.hdr, probe.ldr);
  if (!config.checkpoint_path.empty()) save_checkpoint(config.checkpoint_path, model, hyper, &optim);
  return summary;
}

}  // namespace tonemap
