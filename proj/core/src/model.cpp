#include "tonemap/model.hpp"

#include "tonemap/errors.hpp"

namespace tonemap {

void ModelConfig::validate() const {
  if (width < 1 || encoder_width < 1) throw ConfigError("model width must be positive");
  if (descriptor_dim < 1) throw ConfigError("descriptor_dim must be positive");
  if (grid < 1) throw ConfigError("grid must be positive");
  if (lut_size < 2) throw ConfigError("lut_size must be >= 2");
  if (lut_count < 1) throw ConfigError("lut_count must be positive");
  if (!(residual_output_scale >= 0.0)) throw ConfigError("residual_output_scale must be >= 0");
}

template <typename T>
Model<T> Model<T>::create(const ModelConfig& config) {
  config.validate();
  Model<T> m;
  m.config = config;
  Rng rng(config.seed);
  m.arch.ldp = make_ldp(m.params, rng, config.width);
  m.arch.gtp = make_gtp(m.params, rng, config.width, config.residual_output_scale);
  m.arch.ltt = make_ltt(m.params, rng, config.encoder_width, config.descriptor_dim, config.grid, config.lut_size,
                        config.lut_count);
  m.arch.ide = make_ide(m.params, rng, config.width, config.residual_output_scale);
  return m;
}

template <typename T>
PipelineOutputs<T> forward_pipeline(Tape<T>& tape, const Var<T>& x, const Model<T>& model) {
  PipelineOutputs<T> out;
  out.stack = ldp_forward(tape, x, model.arch.ldp);
  GtpOutput<T> g = gtp_forward(tape, out.stack.base, model.arch.gtp);
  out.globally_mapped = g.output;
  out.ltt = ltt_forward(tape, out.globally_mapped, model.arch.ltt);
  out.ide = ide_refine(tape, out.ltt.output, out.stack, model.arch.ide);
  out.output = out.ide.levels[0];
  return out;
}

template <typename T>
Tensor<T> pad_reflect(const Tensor<T>& x, int64_t new_h, int64_t new_w) {
  if (new_h < x.h() || new_w < x.w()) throw DimensionError("pad_reflect: target smaller than input");
  if ((new_h - x.h() >= x.h() && x.h() > 1) || (new_w - x.w() >= x.w() && x.w() > 1)) {
    throw DimensionError("pad_reflect: padding larger than input " + x.shape().str());
  }
  auto reflect = [](int64_t i, int64_t n) {
    if (n == 1) return int64_t{0};
    return i < n ? i : 2 * (n - 1) - i;
  };
  Tensor<T> out(Shape{x.n(), x.c(), new_h, new_w});
  for (int64_t b = 0; b < x.n(); ++b) {
    for (int64_t c = 0; c < x.c(); ++c) {
      for (int64_t y = 0; y < new_h; ++y) {
        for (int64_t xx = 0; xx < new_w; ++xx) out.at(b, c, y, xx) = x.at(b, c, reflect(y, x.h()), reflect(xx, x.w()));
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> run_model(const Model<T>& model, const Tensor<T>& x) {
  if (x.c() != 3) throw DimensionError("run_model: expected 3 channels, got " + x.shape().str());
  auto round_up = [](int64_t v) { return (v + kBaseFactor - 1) / kBaseFactor * kBaseFactor; };
  const int64_t ph = std::max<int64_t>(round_up(x.h()), kBaseFactor);
  const int64_t pw = std::max<int64_t>(round_up(x.w()), kBaseFactor);
  Tape<T> tape(const_cast<ParameterSet<T>*>(&model.params));
  Var<T> input = tape.constant(ph == x.h() && pw == x.w() ? x : pad_reflect(x, ph, pw));
  PipelineOutputs<T> out = forward_pipeline(tape, input, model);
  Var<T> y = out.output;
  if (ph != x.h() || pw != x.w()) y = ops::crop(y, 0, 0, static_cast<int>(x.h()), static_cast<int>(x.w()));
  require_finite(y.value(), "pipeline output");
  return y.value();
}

template <typename T>
void reset_to_identity_lut_path(Model<T>& model) {
  for (size_t i = 0; i < model.params.size(); ++i) model.params.value(static_cast<ParamId>(i)).fill(T(0));
  const LttParams& ltt = model.arch.ltt;
  const Lut3D<T> identity = Lut3D<T>::identity(ltt.lut_size);
  Tensor<T>& bank = model.params.value(ltt.bank);
  std::copy(identity.entries().data(), identity.entries().data() + identity.entries().numel(), bank.data());
  model.params.value(ltt.predictor.bias)[0] = T(1);
}

#define TONEMAP_INSTANTIATE(T)                                                                  \
  template class Model<T>;                                                                      \
  template PipelineOutputs<T> forward_pipeline(Tape<T>&, const Var<T>&, const Model<T>&);       \
  template Tensor<T> pad_reflect(const Tensor<T>&, int64_t, int64_t);                           \
  template Tensor<T> run_model(const Model<T>&, const Tensor<T>&);                              \
  template void reset_to_identity_lut_path(Model<T>&);
TONEMAP_INSTANTIATE(float)
TONEMAP_INSTANTIATE(double)
#undef TONEMAP_INSTANTIATE

}  // namespace tonemap
