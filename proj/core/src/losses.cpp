#include "tonemap/losses.hpp"

#include <cmath>

#include "tonemap/errors.hpp"
#include "tonemap/pyramid.hpp"

namespace tonemap {
namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

template <typename T>
Tensor<T> gaussian_window_2d(int size, double sigma) {
  std::vector<double> g(static_cast<size_t>(size));
  double total = 0;
  for (int i = 0; i < size; ++i) {
    const double d = i - (size - 1) / 2.0;
    g[i] = std::exp(-d * d / (2 * sigma * sigma));
    total += g[i];
  }
  Tensor<T> k(Shape{1, 1, size, size});
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) k[y * size + x] = static_cast<T>(g[y] * g[x] / (total * total));
  }
  return k;
}

template <typename T>
Var<T> crop_even(const Var<T>& x) {
  const Shape s = x.shape();
  const int h = static_cast<int>(s.h - s.h % 2), w = static_cast<int>(s.w - s.w % 2);
  if (h == s.h && w == s.w) return x;
  return ops::crop(x, 0, 0, h, w);
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {reconstruction, ssim, high_frequency, perceptual}) {
    if (!(v >= 0.0)) throw ConfigError("loss weights must be non-negative");
  }
  if (reconstruction + ssim + high_frequency + perceptual <= 0.0) {
    throw ConfigError("at least one loss weight must be positive");
  }
}

int msssim_scale_count(int64_t h, int64_t w) {
  const int64_t side = std::min(h, w);
  int scales = 0;
  while (scales < static_cast<int>(kMsSsimWeights.size()) && (side >> scales) >= kSsimWindow) ++scales;
  return scales;
}

template <typename T>
AnalyticFeatureExtractor<T>::AnalyticFeatureExtractor() {
  const double taps[5][9] = {
      {-1, 0, 1, -2, 0, 2, -1, 0, 1},  // horizontal Sobel
      {-1, -2, -1, 0, 0, 0, 1, 2, 1},  // vertical Sobel
      {0, 1, 2, -1, 0, 1, -2, -1, 0},  // 45 degrees
      {-2, -1, 0, -1, 0, 1, 0, 1, 2},  // 135 degrees
      {1, 2, 1, 2, 4, 2, 1, 2, 1},     // binomial blur
  };
  const double norms[5] = {8, 8, 8, 8, 16};
  for (int k = 0; k < 5; ++k) {
    Tensor<T> kernel(Shape{1, 1, 3, 3});
    for (int i = 0; i < 9; ++i) kernel[i] = static_cast<T>(taps[k][i] / norms[k]);
    kernels_.push_back(std::move(kernel));
  }
}

template <typename T>
std::vector<Var<T>> AnalyticFeatureExtractor<T>::features(Tape<T>&, const Var<T>& image) const {
  std::vector<Var<T>> out;
  Var<T> level = image;
  for (int scale = 0; scale < 2; ++scale) {
    if (scale == 1) {
      if (level.shape().h < 2 || level.shape().w < 2) break;
      level = ops::avgpool2(crop_even(level));
    }
    for (const auto& k : kernels_) out.push_back(ops::depthwise_filter(level, k, 1, ops::Padding::kReflect));
  }
  return out;
}

template <typename T>
Var<T> loss_re(Tape<T>& tape, const std::vector<Var<T>>& levels, const Tensor<T>& target) {
  if (levels.empty()) throw DimensionError("loss_re: no prediction levels");
  const auto gauss = pyramid::gaussian_pyramid(target, static_cast<int>(levels.size()));
  Var<T> total;
  for (size_t k = 0; k < levels.size(); ++k) {
    require_same_shape(levels[k].shape(), gauss[k].shape(), "loss_re level");
    Var<T> term = ops::mean(ops::abs(ops::sub(levels[k], tape.constant(gauss[k]))));
    total = total.valid() ? ops::add(total, term) : term;
  }
  return total;
}

template <typename T>
Var<T> loss_msssim(Tape<T>& tape, const Var<T>& prediction, const Tensor<T>& target, MsSsimInfo* info) {
  require_same_shape(prediction.shape(), target.shape(), "loss_msssim");
  const int scales = msssim_scale_count(target.h(), target.w());
  if (scales < 1) {
    throw DimensionError("loss_msssim: image " + target.shape().str() + " smaller than the 11-pixel window");
  }
  if (info != nullptr) info->scales = scales;
  double weight_total = 0;
  for (int s = 0; s < scales; ++s) weight_total += kMsSsimWeights[s];

  const T c1 = static_cast<T>(0.01 * 0.01), c2 = static_cast<T>(0.03 * 0.03);
  const Tensor<T> window = gaussian_window_2d<T>(kSsimWindow, kSsimSigma);
  const int c = static_cast<int>(target.c());
  Var<T> x = prediction;
  Var<T> y = tape.constant(target);
  Var<T> product;
  for (int s = 0; s < scales; ++s) {
    if (s > 0) {
      x = ops::avgpool2(crop_even(x));
      y = ops::avgpool2(crop_even(y));
    }
    Var<T> stacked = ops::concat_channels<T>({x, y, ops::mul(x, x), ops::mul(y, y), ops::mul(x, y)});
    Var<T> filtered = ops::depthwise_filter(stacked, window, 0);
    Var<T> mx = ops::slice_channels(filtered, 0, c);
    Var<T> my = ops::slice_channels(filtered, c, c);
    Var<T> exx = ops::slice_channels(filtered, 2 * c, c);
    Var<T> eyy = ops::slice_channels(filtered, 3 * c, c);
    Var<T> exy = ops::slice_channels(filtered, 4 * c, c);
    Var<T> mxy = ops::mul(mx, my);
    Var<T> vx = ops::sub(exx, ops::mul(mx, mx));
    Var<T> vy = ops::sub(eyy, ops::mul(my, my));
    Var<T> cov = ops::sub(exy, mxy);
    Var<T> cs_map = ops::div(ops::add_scalar(ops::mul_scalar(cov, T(2)), c2), ops::add_scalar(ops::add(vx, vy), c2));
    const T exponent = static_cast<T>(kMsSsimWeights[s] / weight_total);
    Var<T> factor;
    if (s + 1 < scales) {
      factor = ops::pow_scalar(ops::mean(cs_map), exponent);
    } else {
      Var<T> l_map = ops::div(ops::add_scalar(ops::mul_scalar(mxy, T(2)), c1),
                              ops::add_scalar(ops::add(ops::mul(mx, mx), ops::mul(my, my)), c1));
      factor = ops::pow_scalar(ops::mean(ops::mul(l_map, cs_map)), exponent);
    }
    product = product.valid() ? ops::mul(product, factor) : factor;
  }
  return ops::add_scalar(ops::mul_scalar(product, T(-1)), T(1));
}

template <typename T>
Var<T> loss_hf(Tape<T>& tape, const PyramidStack<T>& stack, const Tensor<T>& target) {
  const auto lap = pyramid::laplacian_decompose(target, kPyramidScales + 1);
  Var<T> total;
  for (int k = 0; k < kPyramidScales; ++k) {
    require_same_shape(stack.hf[k].shape(), lap.bands[k].shape(), "loss_hf level");
    Var<T> term = ops::mean(ops::abs(ops::sub(stack.hf[k], tape.constant(lap.bands[k]))));
    total = total.valid() ? ops::add(total, term) : term;
  }
  return total;
}

template <typename T>
Var<T> loss_perceptual(Tape<T>& tape, const Var<T>& prediction, const Tensor<T>& target,
                       const FeatureExtractor<T>& extractor) {
  require_same_shape(prediction.shape(), target.shape(), "loss_perceptual");
  const auto fp = extractor.features(tape, prediction);
  const auto ft = extractor.features(tape, tape.constant(target));
  if (fp.size() != ft.size() || fp.empty()) throw DimensionError("loss_perceptual: extractor output mismatch");
  Var<T> total;
  for (size_t i = 0; i < fp.size(); ++i) {
    Var<T> term = ops::mean(ops::square(ops::sub(fp[i], ft[i])));
    total = total.valid() ? ops::add(total, term) : term;
  }
  return total;
}

template <typename T>
Var<T> total_loss(const LossParts<T>& parts, const LossWeights& weights) {
  weights.validate();
  const std::array<std::pair<Var<T>, double>, 4> terms = {{{parts.reconstruction, weights.reconstruction},
                                                           {parts.ssim, weights.ssim},
                                                           {parts.high_frequency, weights.high_frequency},
                                                           {parts.perceptual, weights.perceptual}}};
  Var<T> total;
  for (const auto& [part, w] : terms) {
    if (w == 0.0 || !part.valid()) continue;
    Var<T> term = ops::mul_scalar(part, static_cast<T>(w));
    total = total.valid() ? ops::add(total, term) : term;
  }
  return total;
}

template <typename T>
LossParts<T> compute_loss_parts(Tape<T>& tape, const PipelineOutputs<T>& out, const Tensor<T>& target,
                                const FeatureExtractor<T>& extractor) {
  LossParts<T> parts;
  std::vector<Var<T>> levels(out.ide.levels.begin(), out.ide.levels.end());
  parts.reconstruction = loss_re(tape, levels, target);
  parts.ssim = loss_msssim(tape, out.output, target);
  parts.high_frequency = loss_hf(tape, out.stack, target);
  parts.perceptual = loss_perceptual(tape, out.output, target, extractor);
  return parts;
}

#define TONEMAP_INSTANTIATE(T)                                                                                \
  template class AnalyticFeatureExtractor<T>;                                                                 \
  template Var<T> loss_re(Tape<T>&, const std::vector<Var<T>>&, const Tensor<T>&);                            \
  template Var<T> loss_msssim(Tape<T>&, const Var<T>&, const Tensor<T>&, MsSsimInfo*);                        \
  template Var<T> loss_hf(Tape<T>&, const PyramidStack<T>&, const Tensor<T>&);                                \
  template Var<T> loss_perceptual(Tape<T>&, const Var<T>&, const Tensor<T>&, const FeatureExtractor<T>&);     \
  template Var<T> total_loss(const LossParts<T>&, const LossWeights&);                                        \
  template LossParts<T> compute_loss_parts(Tape<T>&, const PipelineOutputs<T>&, const Tensor<T>&,             \
                                           const FeatureExtractor<T>&);
TONEMAP_INSTANTIATE(float)
TONEMAP_INSTANTIATE(double)
#undef TONEMAP_INSTANTIATE

}  // namespace tonemap
