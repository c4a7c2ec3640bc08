#include "tonemap/ldp.hpp"

#include <cmath>

#include "tonemap/errors.hpp"

namespace tonemap {

std::array<double, 9> gaussian3x3(double sigma) {
  std::array<double, 9> k{};
  double total = 0;
  for (int y = -1; y <= 1; ++y) {
    for (int x = -1; x <= 1; ++x) {
      const double v = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
      k[(y + 1) * 3 + (x + 1)] = v;
      total += v;
    }
  }
  for (double& v : k) v /= total;
  return k;
}

template <typename T>
LdpParams make_ldp(ParameterSet<T>& params, Rng& rng, int width, const std::string& prefix) {
  LdpParams p;
  p.width = width;
  for (int s = 0; s < kPyramidScales; ++s) {
    const std::string name = prefix + ".scale" + std::to_string(s);
    LdpScaleParams& sp = p.scales[s];
    sp.stem = make_conv(params, rng, name + ".stem", s == 0 ? 3 : width, width, 3);
    for (int k = 0; k < 4; ++k) {
      sp.chain[k] = make_conv(params, rng, name + ".chain" + std::to_string(k), width, width, 3);
    }
    sp.fuse = make_conv(params, rng, name + ".fuse", 3 * width, width, 3);
    sp.block = make_residual_block(params, rng, name + ".block", width);
    sp.project = make_conv(params, rng, name + ".project", width, 3, 1);
  }
  return p;
}

template <typename T>
LdpScaleOutput<T> ldp_scale_forward(Tape<T>& tape, const Var<T>& features_in, const LdpScaleParams& p) {
  if (features_in.shape().c != p.stem.in_c) {
    throw DimensionError("ldp: scale expects " + std::to_string(p.stem.in_c) + " channels, got " +
                         features_in.shape().str());
  }
  LdpScaleOutput<T> out;
  Var<T> f = apply(tape, p.stem, features_in);
  for (int k = 0; k < 4; ++k) {
    f = apply(tape, p.chain[k], f);
    out.chain[k] = f;
  }
  for (int k = 0; k < 3; ++k) out.diffs[k] = ops::sub(out.chain[k + 1], out.chain[k]);
  Var<T> d = ops::concat_channels<T>({out.diffs[0], out.diffs[1], out.diffs[2]});
  Var<T> fused = apply(tape, p.block, apply(tape, p.fuse, d));
  out.hf = apply(tape, p.project, fused);
  out.features_down = ops::maxpool2(out.chain[3]);
  return out;
}

template <typename T>
PyramidStack<T> ldp_forward(Tape<T>& tape, const Var<T>& x, const LdpParams& p) {
  const Shape s = x.shape();
  if (s.c != 3) throw DimensionError("ldp: input must have 3 channels, got " + s.str());
  if (s.h % kBaseFactor != 0 || s.w % kBaseFactor != 0) {
    throw DimensionError("ldp: spatial size " + s.str() + " not divisible by 8");
  }
  PyramidStack<T> stack;
  Var<T> features = x;
  for (int k = 0; k < kPyramidScales; ++k) {
    LdpScaleOutput<T> o = ldp_scale_forward(tape, features, p.scales[k]);
    stack.hf[k] = o.hf;
    features = o.features_down;
  }
  stack.base = ops::downsample_bilinear(x, kBaseFactor);
  return stack;
}

template <typename T>
void init_ldp_gaussian(ParameterSet<T>& params, const LdpScaleParams& p, const std::array<double, 4>& sigmas) {
  Tensor<T>& stem = params.value(p.stem.weight);
  stem.fill(T(0));
  const int64_t identity_channels = std::min<int64_t>(stem.n(), stem.c());
  for (int64_t c = 0; c < identity_channels; ++c) stem.at(c, c, 1, 1) = T(1);
  if (p.stem.bias >= 0) params.value(p.stem.bias).fill(T(0));
  for (int k = 0; k < 4; ++k) {
    Tensor<T>& w = params.value(p.chain[k].weight);
    w.fill(T(0));
    const auto g = gaussian3x3(sigmas[k]);
    for (int64_t c = 0; c < std::min(w.n(), w.c()); ++c) {
      for (int i = 0; i < 9; ++i) w.at(c, c, i / 3, i % 3) = static_cast<T>(g[i]);
    }
    if (p.chain[k].bias >= 0) params.value(p.chain[k].bias).fill(T(0));
  }
}

#define TONEMAP_INSTANTIATE(T)                                                                       \
  template LdpParams make_ldp(ParameterSet<T>&, Rng&, int, const std::string&);                      \
  template LdpScaleOutput<T> ldp_scale_forward(Tape<T>&, const Var<T>&, const LdpScaleParams&);      \
  template PyramidStack<T> ldp_forward(Tape<T>&, const Var<T>&, const LdpParams&);                   \
  template void init_ldp_gaussian(ParameterSet<T>&, const LdpScaleParams&, const std::array<double, 4>&);
TONEMAP_INSTANTIATE(float)
TONEMAP_INSTANTIATE(double)
#undef TONEMAP_INSTANTIATE

}  // namespace tonemap
