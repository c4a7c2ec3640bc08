#include "tonemap/ltt.hpp"

#include "tonemap/errors.hpp"

namespace tonemap {

template <typename T>
LttParams make_ltt(ParameterSet<T>& params, Rng& rng, int encoder_width, int descriptor_dim, int grid, int lut_size,
                   int lut_count, const std::string& prefix) {
  LttParams p;
  p.grid = grid;
  p.lut_size = lut_size;
  p.lut_count = lut_count;
  p.descriptor_dim = descriptor_dim;
  LayerInit enc;
  enc.padding = ops::Padding::kReflect;
  p.enc1 = make_conv(params, rng, prefix + ".enc1", 3, encoder_width, 3, enc);
  p.norm1 = make_instance_norm(params, prefix + ".norm1", encoder_width);
  p.enc2 = make_conv(params, rng, prefix + ".enc2", encoder_width, encoder_width, 3, enc);
  p.norm2 = make_instance_norm(params, prefix + ".norm2", encoder_width);
  p.enc3 = make_conv(params, rng, prefix + ".enc3", encoder_width, descriptor_dim, 3, enc);

  LayerInit pred;
  pred.scale = 0.01;
  p.predictor = make_linear(params, rng, prefix + ".predictor", descriptor_dim, lut_count, pred);
  params.value(p.predictor.bias)[0] = T(1);

  Lut3D<T> identity = Lut3D<T>::identity(lut_size);
  const int64_t per_lut = identity.entries().numel();
  Tensor<T> bank(Shape{lut_count, 3, identity.nodes(), 1});
  std::copy(identity.entries().data(), identity.entries().data() + per_lut, bank.data());
  for (int64_t i = per_lut; i < bank.numel(); ++i) bank[i] = static_cast<T>(rng.normal(0.0, 0.01));
  p.bank = params.add(prefix + ".bank", std::move(bank));
  return p;
}

template <typename T>
LttOutput<T> ltt_forward(Tape<T>& tape, const Var<T>& globally_mapped, const LttParams& p) {
  if (globally_mapped.shape().c != 3) {
    throw DimensionError("ltt: input must have 3 channels, got " + globally_mapped.shape().str());
  }
  LttOutput<T> out;
  const T slope = static_cast<T>(kLeakySlope);
  Var<T> e = apply(tape, p.norm1, ops::leaky_relu(apply(tape, p.enc1, globally_mapped), slope));
  e = apply(tape, p.norm2, ops::leaky_relu(apply(tape, p.enc2, e), slope));
  e = apply(tape, p.enc3, e);
  out.context = ops::adaptive_avg_pool(e, p.grid, p.grid);
  out.descriptors = ops::spatial_to_batch(out.context);
  out.weights = apply(tape, p.predictor, out.descriptors);
  out.luts = ops::combine_luts(out.weights, tape.param(p.bank));
  out.output = ops::apply_luts_blended(globally_mapped, out.luts, p.grid);
  return out;
}

template <typename T>
std::vector<Lut3D<T>> extract_luts(const LttOutput<T>& out, const LttParams& p, int64_t batch_index) {
  const Tensor<T>& all = out.luts.value();
  const int64_t tiles = int64_t{p.grid} * p.grid;
  const int64_t per_lut = all.c() * all.h() * all.w();
  std::vector<Lut3D<T>> luts;
  for (int64_t i = 0; i < tiles; ++i) {
    const T* src = all.data() + (batch_index * tiles + i) * per_lut;
    luts.emplace_back(p.lut_size, Tensor<T>(Shape{1, 3, all.h(), 1}, std::vector<T>(src, src + per_lut)));
  }
  return luts;
}

#define TONEMAP_INSTANTIATE(T)                                                                              \
  template LttParams make_ltt(ParameterSet<T>&, Rng&, int, int, int, int, int, const std::string&);         \
  template LttOutput<T> ltt_forward(Tape<T>&, const Var<T>&, const LttParams&);                             \
  template std::vector<Lut3D<T>> extract_luts(const LttOutput<T>&, const LttParams&, int64_t);
TONEMAP_INSTANTIATE(float)
TONEMAP_INSTANTIATE(double)
#undef TONEMAP_INSTANTIATE

}  // namespace tonemap
