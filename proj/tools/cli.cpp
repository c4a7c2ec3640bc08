#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "tonemap/checkpoint.hpp"
#include "tonemap/config_file.hpp"
#include "tonemap/cube.hpp"
#include "tonemap/dataset.hpp"
#include "tonemap/errors.hpp"
#include "tonemap/image_io.hpp"
#include "tonemap/metrics.hpp"
#include "tonemap/normalize.hpp"
#include "tonemap/pyramid.hpp"
#include "tonemap/synthetic.hpp"
#include "tonemap/trainer.hpp"

namespace tonemap::cli {
namespace {

namespace fs = std::filesystem;

Model<float> load_model(const std::string& checkpoint) {
  if (checkpoint.empty()) return Model<float>::create(ModelConfig{});
  return load_checkpoint(checkpoint).model;
}

Tensorf clamp01(Tensorf t) {
  for (float& v : t.values()) v = std::clamp(v, 0.0f, 1.0f);
  return t;
}

Tensorf error_map(const Tensorf& a, const Tensorf& b) {
  Tensorf out(Shape{1, 1, a.h(), a.w()});
  const int64_t plane = a.shape().plane();
  for (int64_t i = 0; i < plane; ++i) {
    double e = 0;
    for (int c = 0; c < 3; ++c) e += std::abs(static_cast<double>(a.plane(0, c)[i]) - b.plane(0, c)[i]);
    out[i] = static_cast<float>(std::min(1.0, 4.0 * e / 3.0));
  }
  return out;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

struct MapArgs {
  std::string input, output, checkpoint;
  double low_pct = 0.5, high_pct = 99.9;
};

int cmd_map(const MapArgs& a, std::ostream& out) {
  const io::HdrImage hdr = io::read_image(a.input);
  const Model<float> model = load_model(a.checkpoint);
  const NormalizedHdr norm = normalize_hdr(hdr.pixels, a.low_pct, a.high_pct);
  const Tensorf mapped = clamp01(run_model(model, norm.image));
  io::write_file(a.output, io::encode_png8(mapped));
  nlohmann::json rec = {{"input", a.input},
                        {"output", a.output},
                        {"normalization",
                         {{"method", norm.record.method},
                          {"low_pct", norm.record.low_pct},
                          {"high_pct", norm.record.high_pct},
                          {"low_value", norm.record.low_value},
                          {"high_value", norm.record.high_value},
                          {"scale", norm.record.scale},
                          {"degenerate", norm.record.degenerate}}}};
  if (!norm.record.warning.empty()) rec["normalization"]["warning"] = norm.record.warning;
  out << rec.dump() << "\n";
  return kOk;
}

struct InitArgs {
  std::string output, config;
  bool identity = false;
};

int cmd_init(const InitArgs& a, std::ostream& out) {
  TrainConfig cfg;
  if (!a.config.empty()) cfg = TrainConfig::from_map(read_config_file(a.config));
  Model<float> model = Model<float>::create(cfg.model);
  if (a.identity) reset_to_identity_lut_path(model);
  save_checkpoint(a.output, model, cfg.to_map());
  out << nlohmann::json{{"checkpoint", a.output}, {"parameters", model.params.count()}, {"identity", a.identity}}.dump()
      << "\n";
  return kOk;
}

struct TrainArgs {
  std::string config;
  int64_t steps = -1;
  std::string checkpoint;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig cfg = TrainConfig::from_map(read_config_file(a.config));
  if (a.steps >= 0) cfg.max_steps = a.steps;
  if (!a.checkpoint.empty()) cfg.checkpoint_path = a.checkpoint;
  if (!cfg.data_dir.empty() && fs::path(cfg.data_dir).is_relative()) {
    cfg.data_dir = (fs::path(a.config).parent_path() / cfg.data_dir).string();
  }
  out << nlohmann::json{{"parameters", Model<float>::create(cfg.model).params.count()}}.dump() << "\n";
  const TrainSummary s = train(cfg, [&](const StepResult& r) { out << step_record_json(r) << "\n"; });
  out << nlohmann::json{{"steps", s.steps}, {"final_loss", s.final_loss}, {"probe_psnr", s.probe_psnr}}.dump() << "\n";
  return kOk;
}

struct EvalArgs {
  std::string pairs, checkpoint, pred, error_maps, report;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  if (a.pred.empty() && a.checkpoint.empty()) {
    err << "eval: one of --pred or --checkpoint is required\n";
    return kUsage;
  }
  const DatasetIndex index = DatasetIndex::scan(a.pairs, "test");
  std::optional<Model<float>> model;
  if (!a.checkpoint.empty()) model = load_model(a.checkpoint);
  if (!a.error_maps.empty()) fs::create_directories(a.error_maps);
  metrics::MetricReport report;
  std::vector<std::string> lines;
  for (const ImagePair& pair : index.pairs) {
    const LoadedPair loaded = load_pair(pair);
    Tensorf prediction;
    if (!a.pred.empty()) {
      std::optional<std::string> found;
      for (const char* ext : {".png", ".pfm"}) {
        const fs::path p = fs::path(a.pred) / (pair.stem + ext);
        if (fs::exists(p)) found = p.string();
      }
      if (!found) throw IoError((fs::path(a.pred) / pair.stem).string(), "no prediction for this stem");
      prediction = io::read_image(*found).pixels;
    } else {
      prediction = clamp01(run_model(*model, loaded.hdr));
    }
    require_same_shape(prediction.shape(), loaded.ldr.shape(), "eval prediction");
    metrics::MetricRecord r;
    r.name = pair.stem;
    r.psnr = metrics::psnr(prediction, loaded.ldr);
    r.ssim = metrics::ssim(prediction, loaded.ldr);
    r.delta_e = metrics::delta_e(prediction, loaded.ldr);
    r.tmqi = metrics::tmqi(prediction, loaded.hdr).q;
    report.records.push_back(r);
    lines.push_back(nlohmann::json{{"image", r.name}, {"psnr", r.psnr}, {"ssim", r.ssim}, {"tmqi", r.tmqi},
                                   {"delta_e", r.delta_e}}
                        .dump());
    if (!a.error_maps.empty()) {
      io::write_file((fs::path(a.error_maps) / (pair.stem + "_error.png")).string(),
                     io::encode_png8(error_map(prediction, loaded.ldr)));
    }
  }
  if (!a.report.empty()) {
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    io::write_file(a.report, io::Bytes(text.begin(), text.end()));
  }
  for (const auto& l : lines) out << l << "\n";
  const metrics::MetricRecord m = report.mean();
  out << "image                  PSNR      SSIM      TMQI      dE\n";
  for (const auto& r : report.records) {
    std::string name = r.name.substr(0, 20);
    name.resize(20, ' ');
    out << name << fmt("%8.3f", r.psnr) << fmt("%10.4f", r.ssim) << fmt("%10.4f", r.tmqi)
        << fmt("%8.3f", r.delta_e) << "\n";
  }
  out << "mean                " << fmt("%8.3f", m.psnr) << fmt("%10.4f", m.ssim) << fmt("%10.4f", m.tmqi)
      << fmt("%8.3f", m.delta_e) << "\n";
  return kOk;
}

struct DecomposeArgs {
  std::string input, output, checkpoint;
  int levels = 4;
};

int cmd_decompose(const DecomposeArgs& a, std::ostream& out) {
  const io::HdrImage hdr = io::read_image(a.input);
  const Tensorf x = normalize_hdr(hdr.pixels).image;
  fs::create_directories(a.output);
  const auto pyr = pyramid::laplacian_decompose(x, a.levels);
  nlohmann::json files = nlohmann::json::array();
  auto emit = [&](const std::string& name, const Tensorf& t) {
    const std::string path = (fs::path(a.output) / name).string();
    io::write_file(path, io::encode_pfm(t));
    files.push_back(path);
  };
  for (size_t k = 0; k < pyr.bands.size(); ++k) emit("band_" + std::to_string(k) + ".pfm", pyr.bands[k]);
  emit("base.pfm", pyr.base);
  if (!a.checkpoint.empty()) {
    const Model<float> model = load_model(a.checkpoint);
    const int64_t h = x.h() / kBaseFactor * kBaseFactor, w = x.w() / kBaseFactor * kBaseFactor;
    if (h == 0 || w == 0) throw DimensionError("decompose: image smaller than 8x8");
    Tensorf cropped(Shape{1, 3, h, w});
    for (int c = 0; c < 3; ++c) {
      for (int64_t y = 0; y < h; ++y) {
        for (int64_t xx = 0; xx < w; ++xx) cropped.at(0, c, y, xx) = x.at(0, c, y, xx);
      }
    }
    Tape<float> tape(const_cast<ParameterSet<float>*>(&model.params));
    const PyramidStack<float> stack = ldp_forward(tape, tape.constant(cropped), model.arch.ldp);
    for (int k = 0; k < kPyramidScales; ++k) emit("learned_h" + std::to_string(k) + ".pfm", stack.hf[k].value());
    emit("learned_base.pfm", stack.base.value());
  }
  out << nlohmann::json{{"files", files}}.dump() << "\n";
  return kOk;
}

struct ExportArgs {
  std::string input, output, checkpoint;
  bool bank = false;
};

int cmd_export_lut(const ExportArgs& a, std::ostream& out, std::ostream& err) {
  const Model<float> model = load_model(a.checkpoint);
  fs::create_directories(a.output);
  nlohmann::json files = nlohmann::json::array();
  const LttParams& ltt = model.arch.ltt;
  if (a.bank) {
    const Tensorf& bank = model.params.value(ltt.bank);
    const int64_t per = bank.numel() / ltt.lut_count;
    for (int r = 0; r < ltt.lut_count; ++r) {
      Tensorf entries(Shape{1, 3, per / 3, 1}, std::vector<float>(bank.data() + r * per, bank.data() + (r + 1) * per));
      const std::string path = (fs::path(a.output) / ("basis_" + std::to_string(r) + ".cube")).string();
      io::export_cube(Lut3D<float>(ltt.lut_size, entries), path, "basis " + std::to_string(r));
      files.push_back(path);
    }
  }
  if (!a.input.empty()) {
    const Tensorf x = normalize_hdr(io::read_image(a.input).pixels).image;
    const int64_t ph = std::max<int64_t>(kBaseFactor, (x.h() + kBaseFactor - 1) / kBaseFactor * kBaseFactor);
    const int64_t pw = std::max<int64_t>(kBaseFactor, (x.w() + kBaseFactor - 1) / kBaseFactor * kBaseFactor);
    Tape<float> tape(const_cast<ParameterSet<float>*>(&model.params));
    const Tensorf padded = ph == x.h() && pw == x.w() ? x : pad_reflect(x, ph, pw);
    const PipelineOutputs<float> outs = forward_pipeline(tape, tape.constant(padded), model);
    const auto luts = extract_luts(outs.ltt, ltt, 0);
    for (size_t i = 0; i < luts.size(); ++i) {
      const int row = static_cast<int>(i) / ltt.grid, col = static_cast<int>(i) % ltt.grid;
      const std::string path =
          (fs::path(a.output) / ("patch_" + std::to_string(row) + "_" + std::to_string(col) + ".cube")).string();
      io::export_cube(luts[i], path, "patch " + std::to_string(row) + "," + std::to_string(col));
      files.push_back(path);
    }
  }
  if (files.empty()) {
    err << "export-lut: nothing to export; pass --input and/or --bank\n";
    return kUsage;
  }
  out << nlohmann::json{{"files", files}}.dump() << "\n";
  return kOk;
}

struct SynthArgs {
  std::string output, op = "gamma";
  int count = 20, size = 64;
  uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  write_synthetic_dataset(a.output, a.count, a.size, a.size, a.seed, parse_tone_operator(a.op));
  out << nlohmann::json{{"dir", a.output}, {"pairs", a.count}}.dump() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"HDR to LDR tone mapping"};
  app.name("tonemap");
  app.require_subcommand(1);

  MapArgs map_args;
  auto* map = app.add_subcommand("map", "Tone map one HDR image to an 8-bit PNG");
  map->add_option("input", map_args.input, "HDR image (.hdr or .pfm)")->required();
  map->add_option("-o,--output", map_args.output, "Output PNG")->required();
  map->add_option("--checkpoint", map_args.checkpoint, "Model checkpoint (default: seeded initialisation)");
  map->add_option("--low-pct", map_args.low_pct, "Low luminance percentile");
  map->add_option("--high-pct", map_args.high_pct, "High luminance percentile");

  InitArgs init_args;
  auto* init = app.add_subcommand("init", "Write a freshly initialised checkpoint");
  init->add_option("-o,--output", init_args.output, "Checkpoint path")->required();
  init->add_option("--config", init_args.config, "Config file supplying model fields");
  init->add_flag("--identity", init_args.identity, "Zero all weights except an identity LUT path");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train from a config file");
  train_cmd->add_option("--config", train_args.config, "Flat key = value config")->required();
  train_cmd->add_option("--steps", train_args.steps, "Override max_steps");
  train_cmd->add_option("--checkpoint", train_args.checkpoint, "Override checkpoint_path");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score predictions against reference LDR images");
  eval->add_option("--pairs", eval_args.pairs, "Directory with hdr/ and ldr/")->required();
  eval->add_option("--checkpoint", eval_args.checkpoint, "Model producing the predictions");
  eval->add_option("--pred", eval_args.pred, "Directory of precomputed predictions named by stem");
  eval->add_option("--error-maps", eval_args.error_maps, "Write |T-Y| maps as PNG here");
  eval->add_option("--report", eval_args.report, "Write line-delimited records to this file");

  DecomposeArgs dec_args;
  auto* dec = app.add_subcommand("decompose", "Write pyramid levels as PFM");
  dec->add_option("input", dec_args.input, "HDR image")->required();
  dec->add_option("-o,--output", dec_args.output, "Output directory")->required();
  dec->add_option("--levels", dec_args.levels, "Gaussian levels")->check(CLI::Range(1, 16));
  dec->add_option("--checkpoint", dec_args.checkpoint, "Also write the learned maps of this model");

  ExportArgs exp_args;
  auto* exp = app.add_subcommand("export-lut", "Export LUTs as .cube files");
  exp->add_option("--checkpoint", exp_args.checkpoint, "Model checkpoint (default: seeded initialisation)");
  exp->add_option("--input", exp_args.input, "HDR image whose per-patch LUTs are exported");
  exp->add_option("-o,--output", exp_args.output, "Output directory")->required();
  exp->add_flag("--bank", exp_args.bank, "Export the basis LUT bank");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Write a procedural HDR/LDR dataset");
  synth->add_option("-o,--output", synth_args.output, "Output directory")->required();
  synth->add_option("--count", synth_args.count, "Number of pairs")->check(CLI::PositiveNumber);
  synth->add_option("--size", synth_args.size, "Image side in pixels")->check(CLI::Range(8, 4096));
  synth->add_option("--seed", synth_args.seed, "Scene seed");
  synth->add_option("--op", synth_args.op, "identity, gamma or reinhard");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "tonemap: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*map) return cmd_map(map_args, out);
    if (*init) return cmd_init(init_args, out);
    if (*train_cmd) return cmd_train(train_args, out);
    if (*eval) return cmd_eval(eval_args, out, err);
    if (*dec) return cmd_decompose(dec_args, out);
    if (*exp) return cmd_export_lut(exp_args, out, err);
    if (*synth) return cmd_synth(synth_args, out);
  } catch (const IoError& e) {
    err << "tonemap: " << e.what() << "\n";
    return kMissingFile;
  } catch (const ConfigError& e) {
    err << "tonemap: config error: " << e.what() << "\n";
    return kConfig;
  } catch (const FormatError& e) {
    err << "tonemap: format error: " << e.what() << "\n";
    return kFormat;
  } catch (const NumericError& e) {
    err << "tonemap: numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    err << "tonemap: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace tonemap::cli
