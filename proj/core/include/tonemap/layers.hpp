#pragma once

#include <string>

#include "tonemap/autodiff.hpp"
#include "tonemap/ops.hpp"
#include "tonemap/rng.hpp"

namespace tonemap {

// Parameter handles for a square convolution; pad = kernel / 2 ("same" size).
struct ConvLayer {
  ParamId weight = -1;
  ParamId bias = -1;  // -1: no bias
  int in_c = 0;
  int out_c = 0;
  int kernel = 3;
  ops::Padding padding = ops::Padding::kZeros;
};

struct LinearLayer {
  ParamId weight = -1;
  ParamId bias = -1;
  int in_d = 0;
  int out_d = 0;
};

struct InstanceNormLayer {
  ParamId weight = -1;
  ParamId bias = -1;
  int channels = 0;
};

// conv -> relu -> conv, plus identity skip.
struct ResidualBlock {
  ConvLayer first;
  ConvLayer second;
};

struct LayerInit {
  // Weights ~ U(-b, b) with b = scale * sqrt(3 / fan_in); biases zero.
  double scale = 1.0;
  bool bias = true;
  ops::Padding padding = ops::Padding::kZeros;
};

template <typename T>
ConvLayer make_conv(ParameterSet<T>& params, Rng& rng, const std::string& name, int in_c, int out_c, int kernel,
                    LayerInit init = {});
template <typename T>
LinearLayer make_linear(ParameterSet<T>& params, Rng& rng, const std::string& name, int in_d, int out_d,
                        LayerInit init = {});
template <typename T>
InstanceNormLayer make_instance_norm(ParameterSet<T>& params, const std::string& name, int channels);
template <typename T>
ResidualBlock make_residual_block(ParameterSet<T>& params, Rng& rng, const std::string& name, int width);

template <typename T>
Var<T> apply(Tape<T>& tape, const ConvLayer& layer, const Var<T>& x);
template <typename T>
Var<T> apply(Tape<T>& tape, const LinearLayer& layer, const Var<T>& x);
template <typename T>
Var<T> apply(Tape<T>& tape, const InstanceNormLayer& layer, const Var<T>& x);
template <typename T>
Var<T> apply(Tape<T>& tape, const ResidualBlock& block, const Var<T>& x);

// Overwrite all weights/biases of a layer with zeros.
template <typename T>
void zero_layer(ParameterSet<T>& params, const ConvLayer& layer);
template <typename T>
void zero_layer(ParameterSet<T>& params, const LinearLayer& layer);

}  // namespace tonemap
