#pragma once

#include <array>
#include <string>

#include "tonemap/layers.hpp"

// Learnable differential pyramid: at each scale a chain of four 3x3
// convolutions whose consecutive differences act as learned DoG bands.
namespace tonemap {

inline constexpr int kPyramidScales = 3;
// Spatial reduction between the input and the low-resolution base.
inline constexpr int kBaseFactor = 8;

struct LdpScaleParams {
  ConvLayer stem;
  std::array<ConvLayer, 4> chain;
  ConvLayer fuse;  // 3*width -> width
  ResidualBlock block;
  ConvLayer project;  // 1x1, width -> 3
};

struct LdpParams {
  int width = 0;
  std::array<LdpScaleParams, kPyramidScales> scales;
};

template <typename T>
struct LdpScaleOutput {
  Var<T> hf;
  Var<T> features_down;
  std::array<Var<T>, 4> chain;
  std::array<Var<T>, 3> diffs;
};

// High-frequency maps H0..H2 (full, 1/2, 1/4 resolution) and the 1/8 base.
template <typename T>
struct PyramidStack {
  std::array<Var<T>, kPyramidScales> hf;
  Var<T> base;
};

template <typename T>
LdpParams make_ldp(ParameterSet<T>& params, Rng& rng, int width, const std::string& prefix = "ldp");

template <typename T>
LdpScaleOutput<T> ldp_scale_forward(Tape<T>& tape, const Var<T>& features_in, const LdpScaleParams& p);

// Requires H and W divisible by 8.
template <typename T>
PyramidStack<T> ldp_forward(Tape<T>& tape, const Var<T>& x, const LdpParams& p);

// Identity stem on the first three channels and depthwise 3x3 Gaussian
// chain kernels with the given sigmas (biases zeroed). Before training this
// turns the chain differences into a classical difference-of-Gaussians stack.
template <typename T>
void init_ldp_gaussian(ParameterSet<T>& params, const LdpScaleParams& p, const std::array<double, 4>& sigmas);

// Normalised 3x3 Gaussian, row-major.
std::array<double, 9> gaussian3x3(double sigma);

}  // namespace tonemap
