// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "op_cases.hpp"
#include "test_support.hpp"
#include "tonemap/checkpoint.hpp"
#include "tonemap/cube.hpp"
#include "tonemap/image_io.hpp"
#include "tonemap/ldp.hpp"
#include "tonemap/losses.hpp"
#include "tonemap/lut.hpp"
#include "tonemap/metrics.hpp"
#include "tonemap/normalize.hpp"
#include "tonemap/pyramid.hpp"
#include "tonemap/synthetic.hpp"
#include "tonemap/trainer.hpp"

using namespace tonemap;
using tonemap::testing::max_abs_diff;
using tonemap::testing::random_tensor;

namespace {

// Tolerances and budgets.
constexpr double kRoundTripTol = 1e-6;
constexpr double kRoundTripSeconds = 10.0;
constexpr double kGradTolFloat = 1e-3;
constexpr double kGradTolDouble = 1e-6;
constexpr double kGradStepFloat = 1e-3;
constexpr double kGradStepDouble = 1e-6;
constexpr double kGradSeconds = 300.0;
// Pipeline losses sum hundreds of terms; 1e-5 balances rounding against
// truncation and relu-kink crossings.
constexpr double kPipelineStep = 1e-5;
constexpr int kPipelineSamples = 6;
constexpr double kLutTol = 1e-6;
constexpr double kBlendTol = 1e-6;
constexpr double kDogTol = 1e-5;
constexpr double kOverfitTarget = 35.0;
constexpr int64_t kOverfitMaxSteps = 2000;
constexpr double kOverfitLr = 1e-4;
constexpr double kOverfitSeconds = 600.0;
constexpr double kGeneralizationGain = 5.0;
constexpr int64_t kGeneralizationMaxSteps = 5000;
constexpr int64_t kHfWindow = 500;
constexpr int64_t kHfEvery = 100;
constexpr int64_t kParamsLow = 150000, kParamsHigh = 300000, kParamsReference = 212000;
constexpr double kCubeTol = 1e-6;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome laplacian_round_trip() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const Tensorf x = random_tensor<float>(Shape{1, 3, 64, 64}, rng, 0, 1);
    worst = std::max(worst, max_abs_diff(x, pyramid::laplacian_collapse(pyramid::laplacian_decompose(x, 4))));
  }
  const double secs = seconds_since(t0);
  return {worst < kRoundTripTol && secs < kRoundTripSeconds,
          "100 images 64x64, max |err| " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

ModelConfig audit_config() {
  ModelConfig cfg;
  cfg.width = 6;
  cfg.encoder_width = 6;
  cfg.lut_size = 5;
  cfg.lut_count = 3;
  cfg.grid = 2;
  cfg.residual_output_scale = 1.0;
  return cfg;
}

struct AuditResult {
  bool passed = true;
  double worst = 0;
  std::string worst_block;
  int checked = 0;
  int excluded = 0;
};

void tally(const std::vector<GradCheckReport>& reports, AuditResult& out) {
  for (const auto& rep : reports) {
    out.passed = out.passed && rep.passed;
    out.checked += rep.checked;
    out.excluded += rep.excluded;
    if (rep.max_rel_error >= out.worst) {
      out.worst = rep.max_rel_error;
      out.worst_block = rep.parameter;
    }
  }
}

// Every parameter block of the pipeline, differentiated through a fixed
// random projection of the output plus the HF term on the detail stack.
struct PipelineProblem {
  Model<float> model = Model<float>::create(audit_config());
  Model<double> model64 = model.cast<double>();
  Tensord x, y, r;
  PipelineProblem() {
    Rng rng(12);
    x = random_tensor<double>(Shape{1, 3, 16, 16}, rng, 0.05, 0.95);
    y = random_tensor<double>(Shape{1, 3, 16, 16}, rng, 0.05, 0.95);
    r = random_tensor<double>(Shape{1, 3, 16, 16}, rng);
  }
  template <typename T>
  LossFn<T> loss(const Model<T>& m) const {
    return [&m, x = x.cast<T>(), y = y.cast<T>(), r = r.cast<T>()](Tape<T>& tape) {
      const auto out = forward_pipeline(tape, tape.constant(x), m);
      return ops::add(ops::sum(ops::mul(out.output, tape.constant(r))), loss_hf(tape, out.stack, y));
    };
  }
};

AuditResult pipeline_audit_double() {
  PipelineProblem p;
  GradCheckOptions opt;
  opt.step = kPipelineStep;
  opt.tolerance = kGradTolDouble;
  opt.samples = kPipelineSamples;
  AuditResult out;
  tally(finite_diff_check_all(p.model64.params, p.loss(p.model64), opt), out);
  return out;
}

// Float reverse mode against double central differences at the same values.
AuditResult pipeline_audit_float() {
  PipelineProblem p;
  GradCheckOptions opt;
  opt.step = kPipelineStep;
  opt.tolerance = kGradTolFloat;
  opt.samples = kPipelineSamples;
  AuditResult out;
  tally(mixed_precision_check_all(p.model.params, p.loss(p.model), p.loss(p.model64), opt), out);
  return out;
}

Outcome gradient_audit() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::vector<std::string> failures;
  double worst_f = 0, worst_d = 0;
  const auto cases_f = tonemap::testing::differentiable_op_cases<float>();
  const auto cases_d = tonemap::testing::differentiable_op_cases<double>();
  for (const auto& c : cases_f) {
    const auto res = tonemap::testing::check_op_case(c, kGradStepFloat, kGradTolFloat, 11);
    for (const auto& r : res.reports) worst_f = std::max(worst_f, r.max_rel_error);
    if (!res.passed) failures.push_back(c.name + "/f32");
    ok = ok && res.passed;
  }
  for (const auto& c : cases_d) {
    const auto res = tonemap::testing::check_op_case(c, kGradStepDouble, kGradTolDouble, 11);
    for (const auto& r : res.reports) worst_d = std::max(worst_d, r.max_rel_error);
    if (!res.passed) failures.push_back(c.name + "/f64");
    ok = ok && res.passed;
  }
  const AuditResult pf = pipeline_audit_float();
  const AuditResult pd = pipeline_audit_double();
  if (!pf.passed) failures.push_back("pipeline/f32 worst " + pf.worst_block);
  if (!pd.passed) failures.push_back("pipeline/f64 worst " + pd.worst_block);
  ok = ok && pf.passed && pd.passed;
  const double secs = seconds_since(t0);
  ok = ok && secs < kGradSeconds;
  std::string detail = std::to_string(cases_d.size()) + " ops, op rel err f32 " + fmt("%.2g", worst_f) + " f64 " +
                       fmt("%.2g", worst_d) + "; pipeline blocks rel err f32 " + fmt("%.2g", pf.worst) + " f64 " +
                       fmt("%.2g", pd.worst) + " (" + std::to_string(pf.checked + pd.checked) + " coords, " +
                       std::to_string(pf.excluded + pd.excluded) + " kinks excluded); " + fmt("%.1f", secs) + " s";
  for (const auto& f : failures) detail += "; failed " + f;
  return {ok, detail};
}

// Trilinear lookup written from the 8-corner definition.
std::array<double, 3> corner_oracle(const Lut3D<double>& lut, double r, double g, double b) {
  const int n = lut.size();
  const double pr = std::clamp(r, 0.0, 1.0) * (n - 1), pg = std::clamp(g, 0.0, 1.0) * (n - 1),
               pb = std::clamp(b, 0.0, 1.0) * (n - 1);
  const int r0 = std::min(static_cast<int>(pr), n - 2), g0 = std::min(static_cast<int>(pg), n - 2),
            b0 = std::min(static_cast<int>(pb), n - 2);
  const double fr = pr - r0, fg = pg - g0, fb = pb - b0;
  std::array<double, 3> out{};
  for (int corner = 0; corner < 8; ++corner) {
    const int dr = corner & 1, dg = (corner >> 1) & 1, db = (corner >> 2) & 1;
    const double w = (dr ? fr : 1 - fr) * (dg ? fg : 1 - fg) * (db ? fb : 1 - fb);
    for (int c = 0; c < 3; ++c) out[c] += w * lut.at(c, r0 + dr, g0 + dg, b0 + db);
  }
  return out;
}

Lut3D<double> random_lut(int size, Rng& rng) {
  Lut3D<double> lut(size);
  for (auto& v : lut.entries().values()) v = rng.uniform(-0.2, 1.2);
  return lut;
}

Outcome lut_properties() {
  Rng rng(303);
  const Tensord img = random_tensor<double>(Shape{2, 3, 17, 23}, rng, -0.3, 1.3);
  Tensord clamped = img;
  for (auto& v : clamped.values()) v = std::clamp(v, 0.0, 1.0);
  const double identity_err = max_abs_diff(apply_lut(img, Lut3D<double>::identity(9)), clamped);

  const Lut3D<double> lut = random_lut(9, rng);
  double corner_err = 0;
  for (int i = 0; i < 10000; ++i) {
    const double r = rng.uniform(), g = rng.uniform(), b = rng.uniform();
    const auto got = lut.lookup(r, g, b);
    const auto want = corner_oracle(lut, r, g, b);
    for (int c = 0; c < 3; ++c) corner_err = std::max(corner_err, std::abs(got[c] - want[c]));
  }

  std::vector<Lut3D<double>> bank;
  for (int k = 0; k < 8; ++k) bank.push_back(random_lut(9, rng));
  double linear_err = 0;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(8), b(8), ab(8);
    const double alpha = rng.uniform(-2, 2), beta = rng.uniform(-2, 2);
    for (int k = 0; k < 8; ++k) {
      a[k] = rng.uniform(-1, 1);
      b[k] = rng.uniform(-1, 1);
      ab[k] = alpha * a[k] + beta * b[k];
    }
    const Lut3D<double> la = combine_luts(a, bank), lb = combine_luts(b, bank), lab = combine_luts(ab, bank);
    for (int64_t i = 0; i < lab.entries().numel(); ++i)
      linear_err = std::max(linear_err, std::abs(lab.entries()[i] - (alpha * la.entries()[i] + beta * lb.entries()[i])));
  }
  const bool ok = identity_err < kLutTol && corner_err < kLutTol && linear_err < kLutTol;
  return {ok, "identity " + fmt("%.2g", identity_err) + ", corner oracle (1e4 pts) " + fmt("%.2g", corner_err) +
                  ", combine linearity " + fmt("%.2g", linear_err)};
}

Outcome blending() {
  Rng rng(404);
  double unity_err = 0;
  for (int t = 0; t < 1000; ++t) {
    const int64_t h = 4 + static_cast<int64_t>(rng.below(300)), w = 4 + static_cast<int64_t>(rng.below(300));
    const int grid = 1 + static_cast<int>(rng.below(6));
    const auto bw = blend_weights(rng.uniform(0, h - 1.0), rng.uniform(0, w - 1.0), h, w, grid);
    double sum = 0;
    for (int k = 0; k < bw.count; ++k) sum += bw.weight[k];
    unity_err = std::max(unity_err, std::abs(sum - 1.0));
  }
  // Equal LUTs in every patch: the blended output at each pair of pixels
  // straddling a tile boundary must equal the single-LUT output.
  const int grid = 4;
  const Lut3D<double> lut = random_lut(9, rng);
  const Tensord img = random_tensor<double>(Shape{1, 3, 32, 40}, rng, 0, 1);
  Tensord stacked(Shape{grid * grid, 3, lut.nodes(), 1});
  for (int p = 0; p < grid * grid; ++p)
    std::copy_n(lut.entries().data(), lut.entries().numel(), stacked.data() + p * lut.entries().numel());
  Tape<double> tape;
  const Tensord fused = ops::apply_luts_blended(tape.constant(img), tape.constant(stacked), grid).value();
  const Tensord single = apply_lut(img, lut);
  double seam = 0;
  for (int64_t y = 0; y < 32; ++y)
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t x : {9, 10, 19, 20, 29, 30}) seam = std::max(seam, std::abs(fused.at(0, c, y, x) - single.at(0, c, y, x)));
  for (int64_t x = 0; x < 40; ++x)
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t y : {7, 8, 15, 16, 23, 24}) seam = std::max(seam, std::abs(fused.at(0, c, y, x) - single.at(0, c, y, x)));
  // Weights themselves are continuous across boundaries.
  double jump = 0;
  for (double boundary : {10.0, 20.0, 30.0}) {
    const auto a = blend_weights(13.0, boundary - 1e-9, 32, 40, grid);
    const auto b = blend_weights(13.0, boundary + 1e-9, 32, 40, grid);
    std::array<double, 16> wa{}, wb{};
    for (int k = 0; k < a.count; ++k) wa[a.patch[k]] += a.weight[k];
    for (int k = 0; k < b.count; ++k) wb[b.patch[k]] += b.weight[k];
    for (int p = 0; p < 16; ++p) jump = std::max(jump, std::abs(wa[p] - wb[p]));
  }
  const bool ok = unity_err < kBlendTol && seam < kBlendTol && jump < kBlendTol;
  return {ok, "|sum w - 1| " + fmt("%.2g", unity_err) + " (1e3 px), boundary output " + fmt("%.2g", seam) +
                  ", weight jump " + fmt("%.2g", jump)};
}

Tensord blur3(const Tensord& x, const std::array<double, 9>& k) {
  Tensord y(x.shape());
  const Shape s = x.shape();
  for (int64_t c = 0; c < s.c; ++c)
    for (int64_t i = 0; i < s.h; ++i)
      for (int64_t j = 0; j < s.w; ++j) {
        double acc = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int64_t yy = i + dy, xx = j + dx;
            if (yy < 0 || yy >= s.h || xx < 0 || xx >= s.w) continue;
            acc += k[(dy + 1) * 3 + dx + 1] * x.at(0, c, yy, xx);
          }
        y.at(0, c, i, j) = acc;
      }
  return y;
}

Outcome dog_oracle() {
  constexpr std::array<double, 4> sigmas = {0.5, 0.8, 1.2, 1.6};
  Rng rng(505);
  ParameterSet<double> params;
  const LdpParams p = make_ldp(params, rng, 4);
  for (const auto& s : p.scales) init_ldp_gaussian(params, s, sigmas);
  double worst = 0;
  for (int scale = 0; scale < kPyramidScales; ++scale) {
    // Coarser scales consume the previous scale's feature maps.
    const int side = 32 >> scale;
    const int64_t channels = scale == 0 ? 3 : 4;
    const Tensord x = random_tensor<double>(Shape{1, channels, side, side}, rng, 0, 1);
    Tape<double> tape(&params);
    const auto out = ldp_scale_forward(tape, tape.constant(x), p.scales[scale]);
    std::array<Tensord, 4> blurred;
    Tensord cur = x;
    for (int k = 0; k < 4; ++k) blurred[k] = cur = blur3(cur, gaussian3x3(sigmas[k]));
    for (int k = 0; k < 3; ++k) {
      const Tensord& d = out.diffs[k].value();
      for (int64_t c = 0; c < channels; ++c)
        for (int64_t i = 0; i < side; ++i)
          for (int64_t j = 0; j < side; ++j)
            worst = std::max(worst, std::abs(d.at(0, c, i, j) - (blurred[k + 1].at(0, c, i, j) - blurred[k].at(0, c, i, j))));
    }
  }
  return {worst < kDogTol, "3 scales x 3 differences, max |err| " + fmt("%.2g", worst)};
}

OverfitResult run_overfit() {
  const Tensorf x = normalize_hdr(synthetic_hdr_scene(64, 64, 1)).image;
  const Tensorf y = apply_tone_operator(x, ToneOperator::kGamma);
  TrainConfig cfg;
  cfg.lr = kOverfitLr;
  cfg.batch_size = 1;
  cfg.crop_size = 64;
  cfg.max_steps = kOverfitMaxSteps;
  Model<float> model = Model<float>::create(cfg.model);
  return overfit_single_pair(model, x, y, cfg, kOverfitTarget);
}

OverfitResult first_overfit;

Outcome overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  first_overfit = run_overfit();
  const double secs = seconds_since(t0);
  const bool ok = first_overfit.reached && first_overfit.final_psnr >= kOverfitTarget && secs < kOverfitSeconds;
  return {ok, "64x64 gamma pair, " + fmt("%.2f", first_overfit.final_psnr) + " dB after " +
                  std::to_string(first_overfit.steps) + " steps (lr 1e-4, b1 0.9, b2 0.99), " + fmt("%.1f", secs) + " s"};
}

Outcome generalization() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr int kSize = 96;
  std::vector<LoadedPair> train_set, val;
  for (int i = 0; i < 20; ++i) {
    LoadedPair p;
    p.stem = "scene_" + std::to_string(i);
    p.hdr = normalize_hdr(synthetic_hdr_scene(kSize, kSize, 100 + i * 7919)).image;
    p.ldr = apply_tone_operator(p.hdr, ToneOperator::kGamma);
    (i < 16 ? train_set : val).push_back(p);
  }
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.crop_size = 64;
  auto val_psnr = [&](const Model<float>& m) {
    double s = 0;
    for (const auto& p : val) s += pair_psnr(m, p.hdr, p.ldr);
    return s / static_cast<double>(val.size());
  };
  Model<float> identity = Model<float>::create(cfg.model);
  reset_to_identity_lut_path(identity);
  const double baseline = val_psnr(identity);

  // Fixed probe for the detail loss.
  Batch probe;
  probe.x = Tensorf(Shape{static_cast<int64_t>(val.size()), 3, kSize, kSize});
  probe.y = probe.x;
  for (size_t i = 0; i < val.size(); ++i) {
    std::copy_n(val[i].hdr.data(), val[i].hdr.numel(), probe.x.plane(static_cast<int64_t>(i), 0));
    std::copy_n(val[i].ldr.data(), val[i].ldr.numel(), probe.y.plane(static_cast<int64_t>(i), 0));
  }
  Model<float> model = Model<float>::create(cfg.model);
  OptimState<float> optim(model.params, cfg.adamw());
  AnalyticFeatureExtractor<float> extractor;
  BatchLoader loader(train_set, SampleOptions{cfg.batch_size, cfg.crop_size, true}, 5);
  std::vector<double> hf;
  double best = val_psnr(model);
  int64_t reached_at = -1, step = 0;
  for (; step <= kGeneralizationMaxSteps; ++step) {
    if (step % kHfEvery == 0) {
      if (step <= kHfWindow) hf.push_back(evaluate_batch(model, probe, cfg, extractor).high_frequency);
      best = std::max(best, val_psnr(model));
      if (reached_at < 0 && best - baseline >= kGeneralizationGain) reached_at = step;
      if (reached_at >= 0 && step >= kHfWindow) break;
    }
    if (step == kGeneralizationMaxSteps) break;
    train_step(model, optim, loader.next(), cfg, step, extractor);
  }
  bool decreasing = hf.size() == static_cast<size_t>(kHfWindow / kHfEvery + 1);
  for (size_t i = 1; i < hf.size(); ++i) decreasing = decreasing && hf[i] < hf[i - 1];
  std::string trace;
  for (double v : hf) trace += (trace.empty() ? "" : " ") + fmt("%.4f", v);
  const bool ok = reached_at >= 0 && decreasing;
  return {ok, "val PSNR identity " + fmt("%.2f", baseline) + " -> " + fmt("%.2f", best) + " dB (+5 dB at step " +
                  std::to_string(reached_at) + "), L_HF every 100 steps to 500: " + trace + "; " +
                  fmt("%.1f", seconds_since(t0)) + " s"};
}

Outcome metric_sanity() {
  Rng rng(808);
  const Tensord x = random_tensor<double>(Shape{1, 3, 40, 40}, rng, 0, 1);
  const double p = metrics::psnr(x, x), s = metrics::ssim(x, x), de = metrics::delta_e(x, x);
  bool range_ok = true;
  for (int t = 0; t < 1000; ++t) {
    const int h = 11 + static_cast<int>(rng.below(14)), w = 11 + static_cast<int>(rng.below(14));
    Tensord hdr(Shape{1, 3, h, w}), ldr(Shape{1, 3, h, w});
    const double spread = rng.uniform(0, 8);
    for (auto& v : hdr.values()) v = std::exp(rng.uniform(-spread, spread));
    for (auto& v : ldr.values()) v = rng.uniform();
    const double q = metrics::tmqi(ldr, hdr).q;
    range_ok = range_ok && std::isfinite(q) && q >= 0 && q <= 1;
  }
  // Horizontal exponential ramp over five decades.
  Tensord ramp(Shape{1, 3, 64, 96});
  for (int64_t y = 0; y < 64; ++y)
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t xx = 0; xx < 96; ++xx) ramp.at(0, c, y, xx) = std::pow(10.0, -2.0 + 5.0 * xx / 95.0);
  Tensord gamma = ramp, clipped = ramp;
  for (auto& v : gamma.values()) v = std::pow(v / 1000.0, 1.0 / 2.2);
  for (auto& v : clipped.values()) v = std::min(v, 1.0);
  const double qg = metrics::tmqi(gamma, ramp).q, qc = metrics::tmqi(clipped, ramp).q;
  const bool ok = p == 99.0 && s == 1.0 && de == 0.0 && range_ok && qg > qc;
  return {ok, "PSNR " + fmt("%.0f", p) + ", SSIM " + fmt("%.6f", s) + ", dE " + fmt("%.3g", de) +
                  ", TMQI in [0,1] on 1000 pairs: " + (range_ok ? "yes" : "no") + ", ramp gamma " + fmt("%.4f", qg) +
                  " vs clipped " + fmt("%.4f", qc)};
}

Outcome parameter_budget() {
  const Model<float> m = Model<float>::create(ModelConfig{});
  const int64_t n = m.params.count();
  const bool ok = n >= kParamsLow && n <= kParamsHigh;
  return {ok, "default config " + std::to_string(n) + " trainable parameters (published reference ~" +
                  std::to_string(kParamsReference / 1000) + "K, accepted range [150K, 300K])"};
}

Outcome codec_round_trips() {
  std::vector<std::string> notes;
  bool ok = true;

  const uint8_t px[4] = {128, 128, 128, 129};
  float rgb[3];
  io::rgbe_to_float(px, rgb);
  const double expected = (128 + 0.5) / 256.0 * std::ldexp(1.0, 129 - 128);
  const bool rgbe_ok = rgb[0] == expected && rgb[1] == expected && rgb[2] == expected;
  ok = ok && rgbe_ok;
  notes.push_back("RGBE (128,128,128,129) -> " + fmt("%.8f", rgb[0]));

  Rng rng(1010);
  Tensorf img = random_tensor<float>(Shape{1, 3, 19, 27}, rng, 0, 50);
  img[5] = -1.5f;
  img[6] = 1e-30f;
  const Tensorf back = io::decode_pfm(io::encode_pfm(img));
  const bool pfm_ok = back.shape() == img.shape() && std::equal(img.values().begin(), img.values().end(), back.values().begin());
  ok = ok && pfm_ok;
  notes.push_back(std::string("PFM bit-exact ") + (pfm_ok ? "yes" : "no"));

  const auto dir = std::filesystem::temp_directory_path() / "tonemap_acceptance";
  std::filesystem::create_directories(dir);
  Lut3D<float> lut(9);
  for (auto& v : lut.entries().values()) v = static_cast<float>(rng.uniform(-0.1, 1.1));
  io::export_cube(lut, (dir / "lut.cube").string(), "acceptance");
  const Lut3D<float> lut2 = io::import_cube((dir / "lut.cube").string());
  const double cube_err = lut2.size() == lut.size() ? max_abs_diff(lut.entries(), lut2.entries()) : 1e9;
  ok = ok && cube_err < kCubeTol;
  notes.push_back(".cube re-import " + fmt("%.2g", cube_err));

  Model<float> model = Model<float>::create(ModelConfig{});
  for (size_t i = 0; i < model.params.size(); ++i)
    for (auto& v : model.params.value(static_cast<ParamId>(i)).values()) v += static_cast<float>(rng.normal() * 1e-3);
  save_checkpoint((dir / "m.tmck").string(), model, {{"lr", "0.0001"}});
  const Checkpoint ck = load_checkpoint((dir / "m.tmck").string());
  bool ck_ok = ck.model.params.size() == model.params.size();
  for (size_t i = 0; ck_ok && i < model.params.size(); ++i) {
    const auto& a = model.params.value(static_cast<ParamId>(i));
    const auto& b = ck.model.params.value(static_cast<ParamId>(i));
    ck_ok = ck.model.params.name(static_cast<ParamId>(i)) == model.params.name(static_cast<ParamId>(i)) &&
            a.shape() == b.shape() && std::memcmp(a.data(), b.data(), sizeof(float) * a.numel()) == 0;
  }
  ok = ok && ck_ok;
  notes.push_back(std::string("checkpoint bit-exact ") + (ck_ok ? "yes" : "no"));
  std::filesystem::remove_all(dir);

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : ", ") + n;
  return {ok, detail};
}

Outcome determinism() {
  if (first_overfit.loss.empty()) first_overfit = run_overfit();
  const OverfitResult second = run_overfit();
  const bool ok = second.loss == first_overfit.loss && second.psnr == first_overfit.psnr &&
                  second.steps == first_overfit.steps;
  return {ok, "two seeded overfit runs, " + std::to_string(second.loss.size()) + " steps, trajectories " +
                  (ok ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"laplacian round trip", laplacian_round_trip},
      {"gradient audit", gradient_audit},
      {"LUT properties", lut_properties},
      {"blending", blending},
      {"DoG oracle", dog_oracle},
      {"overfit harness", overfit},
      {"tiny generalization", generalization},
      {"metric sanity", metric_sanity},
      {"parameter budget", parameter_budget},
      {"codec round trips", codec_round_trips},
      {"determinism", determinism},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
