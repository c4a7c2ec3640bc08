#include "tonemap/gtp.hpp"

#include "tonemap/errors.hpp"

namespace tonemap {

template <typename T>
GtpParams make_gtp(ParameterSet<T>& params, Rng& rng, int width, double output_scale, const std::string& prefix) {
  GtpParams p;
  p.width = width;
  for (int i = 0; i < 3; ++i) {
    p.condition[i] = make_conv(params, rng, prefix + ".condition" + std::to_string(i), i == 0 ? 3 : width, width, 3);
  }
  LayerInit head;
  head.bias = false;
  for (int l = 0; l < kGtpLayers; ++l) {
    p.gamma_heads[l] = make_linear(params, rng, prefix + ".gamma" + std::to_string(l), width, width, head);
    p.beta_heads[l] = make_linear(params, rng, prefix + ".beta" + std::to_string(l), width, width, head);
  }
  p.lift = make_conv(params, rng, prefix + ".lift", 3, width, 3);
  LayerInit core;
  core.bias = false;
  for (int l = 0; l < kGtpLayers; ++l) {
    p.core[l] = make_conv(params, rng, prefix + ".core" + std::to_string(l), width, width, 3, core);
  }
  LayerInit out;
  out.scale = output_scale;
  p.project = make_conv(params, rng, prefix + ".project", width, 3, 3, out);
  return p;
}

template <typename T>
GtpOutput<T> gtp_forward(Tape<T>& tape, const Var<T>& low_res, const GtpParams& p) {
  if (low_res.shape().c != 3) throw DimensionError("gtp: input must have 3 channels, got " + low_res.shape().str());
  GtpOutput<T> out;
  Var<T> c = low_res;
  for (const auto& layer : p.condition) c = ops::relu(apply(tape, layer, c));
  out.condition = ops::global_avg_pool(c);

  Var<T> f = apply(tape, p.lift, low_res);
  out.features[0] = f;
  for (int l = 0; l < kGtpLayers; ++l) {
    out.gamma[l] = apply(tape, p.gamma_heads[l], out.condition);
    out.beta[l] = apply(tape, p.beta_heads[l], out.condition);
    Var<T> conv = apply(tape, p.core[l], f);
    f = ops::relu(ops::add(ops::scale_shift(conv, out.gamma[l], out.beta[l]), f));
    out.features[l + 1] = f;
  }
  out.output = ops::add(low_res, apply(tape, p.project, f));
  return out;
}

#define TONEMAP_INSTANTIATE(T)                                                                   \
  template GtpParams make_gtp(ParameterSet<T>&, Rng&, int, double, const std::string&);          \
  template GtpOutput<T> gtp_forward(Tape<T>&, const Var<T>&, const GtpParams&);
TONEMAP_INSTANTIATE(float)
TONEMAP_INSTANTIATE(double)
#undef TONEMAP_INSTANTIATE

}  // namespace tonemap
