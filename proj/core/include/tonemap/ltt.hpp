#pragma once

#include <string>

#include "tonemap/layers.hpp"
#include "tonemap/lut.hpp"

// Local tone tuning: a light encoder yields an N x N grid of descriptors;
// each descriptor predicts mixing weights over a shared bank of basis LUTs,
// and the resulting per-tile LUTs are applied with bilinear tile blending.
namespace tonemap {

struct LttParams {
  int grid = 4;
  int lut_size = 9;
  int lut_count = 8;
  int descriptor_dim = 6;
  ConvLayer enc1, enc2, enc3;
  InstanceNormLayer norm1, norm2;
  LinearLayer predictor;
  ParamId bank = -1;  // (R, 3, V^3, 1)
};

template <typename T>
struct LttOutput {
  Var<T> output;       // T3
  Var<T> context;      // (n, m, N, N)
  Var<T> descriptors;  // (n*N*N, m, 1, 1)
  Var<T> weights;      // (n*N*N, R, 1, 1)
  Var<T> luts;         // (n*N*N, 3, V^3, 1)
};

inline constexpr double kLeakySlope = 0.2;

// Bank: entry 0 is the identity LUT, the rest small Gaussian noise; the
// predictor bias is one-hot on entry 0 so the untrained module is close to
// an identity mapping.
template <typename T>
LttParams make_ltt(ParameterSet<T>& params, Rng& rng, int encoder_width, int descriptor_dim, int grid, int lut_size,
                   int lut_count, const std::string& prefix = "ltt");

template <typename T>
LttOutput<T> ltt_forward(Tape<T>& tape, const Var<T>& globally_mapped, const LttParams& p);

// Per-tile LUTs of a forward pass as plain Lut3D values (batch item `b`).
template <typename T>
std::vector<Lut3D<T>> extract_luts(const LttOutput<T>& out, const LttParams& p, int64_t batch_index = 0);

}  // namespace tonemap
