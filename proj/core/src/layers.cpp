#include "tonemap/layers.hpp"

#include <cmath>

namespace tonemap {
namespace {

template <typename T>
Tensor<T> uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor<T> t(shape);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

}  // namespace

template <typename T>
ConvLayer make_conv(ParameterSet<T>& params, Rng& rng, const std::string& name, int in_c, int out_c, int kernel,
                    LayerInit init) {
  ConvLayer layer;
  layer.in_c = in_c;
  layer.out_c = out_c;
  layer.kernel = kernel;
  layer.padding = init.padding;
  const double bound = init.scale * std::sqrt(3.0 / static_cast<double>(in_c * kernel * kernel));
  layer.weight = params.add(name + ".weight", uniform_tensor<T>(Shape{out_c, in_c, kernel, kernel}, bound, rng));
  if (init.bias) layer.bias = params.add(name + ".bias", Tensor<T>(Shape{1, out_c, 1, 1}));
  return layer;
}

template <typename T>
LinearLayer make_linear(ParameterSet<T>& params, Rng& rng, const std::string& name, int in_d, int out_d,
                        LayerInit init) {
  LinearLayer layer;
  layer.in_d = in_d;
  layer.out_d = out_d;
  const double bound = init.scale * std::sqrt(3.0 / static_cast<double>(in_d));
  layer.weight = params.add(name + ".weight", uniform_tensor<T>(Shape{out_d, in_d, 1, 1}, bound, rng));
  if (init.bias) layer.bias = params.add(name + ".bias", Tensor<T>(Shape{1, out_d, 1, 1}));
  return layer;
}

template <typename T>
InstanceNormLayer make_instance_norm(ParameterSet<T>& params, const std::string& name, int channels) {
  InstanceNormLayer layer;
  layer.channels = channels;
  layer.weight = params.add(name + ".weight", Tensor<T>(Shape{1, channels, 1, 1}, T(1)));
  layer.bias = params.add(name + ".bias", Tensor<T>(Shape{1, channels, 1, 1}));
  return layer;
}

template <typename T>
ResidualBlock make_residual_block(ParameterSet<T>& params, Rng& rng, const std::string& name, int width) {
  ResidualBlock block;
  block.first = make_conv(params, rng, name + ".conv1", width, width, 3);
  block.second = make_conv(params, rng, name + ".conv2", width, width, 3);
  return block;
}

template <typename T>
Var<T> apply(Tape<T>& tape, const ConvLayer& layer, const Var<T>& x) {
  ops::Conv2dOptions opt;
  opt.pad = layer.kernel / 2;
  opt.padding = layer.padding;
  const Var<T> bias = layer.bias >= 0 ? tape.param(layer.bias) : Var<T>();
  return ops::conv2d(x, tape.param(layer.weight), bias, opt);
}

template <typename T>
Var<T> apply(Tape<T>& tape, const LinearLayer& layer, const Var<T>& x) {
  const Var<T> bias = layer.bias >= 0 ? tape.param(layer.bias) : Var<T>();
  return ops::linear(x, tape.param(layer.weight), bias);
}

template <typename T>
Var<T> apply(Tape<T>& tape, const InstanceNormLayer& layer, const Var<T>& x) {
  return ops::instance_norm(x, tape.param(layer.weight), tape.param(layer.bias));
}

template <typename T>
Var<T> apply(Tape<T>& tape, const ResidualBlock& block, const Var<T>& x) {
  Var<T> h = ops::relu(apply(tape, block.first, x));
  return ops::add(x, apply(tape, block.second, h));
}

template <typename T>
void zero_layer(ParameterSet<T>& params, const ConvLayer& layer) {
  params.value(layer.weight).fill(T(0));
  if (layer.bias >= 0) params.value(layer.bias).fill(T(0));
}

template <typename T>
void zero_layer(ParameterSet<T>& params, const LinearLayer& layer) {
  params.value(layer.weight).fill(T(0));
  if (layer.bias >= 0) params.value(layer.bias).fill(T(0));
}

#define TONEMAP_INSTANTIATE(T)                                                                                   \
  template ConvLayer make_conv(ParameterSet<T>&, Rng&, const std::string&, int, int, int, LayerInit);            \
  template LinearLayer make_linear(ParameterSet<T>&, Rng&, const std::string&, int, int, LayerInit);             \
  template InstanceNormLayer make_instance_norm(ParameterSet<T>&, const std::string&, int);                      \
  template ResidualBlock make_residual_block(ParameterSet<T>&, Rng&, const std::string&, int);                   \
  template Var<T> apply(Tape<T>&, const ConvLayer&, const Var<T>&);                                              \
  template Var<T> apply(Tape<T>&, const LinearLayer&, const Var<T>&);                                            \
  template Var<T> apply(Tape<T>&, const InstanceNormLayer&, const Var<T>&);                                      \
  template Var<T> apply(Tape<T>&, const ResidualBlock&, const Var<T>&);                                          \
  template void zero_layer(ParameterSet<T>&, const ConvLayer&);                                                  \
  template void zero_layer(ParameterSet<T>&, const LinearLayer&);
TONEMAP_INSTANTIATE(float)
TONEMAP_INSTANTIATE(double)
#undef TONEMAP_INSTANTIATE

}  // namespace tonemap
