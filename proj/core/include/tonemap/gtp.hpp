#pragma once

#include <array>
#include <string>

#include "tonemap/layers.hpp"

// Global tone perception: a condition network summarises the low-resolution
// input into a vector z; per-layer heads turn z into channel scales/shifts
// that modulate a residual convolutional core.
namespace tonemap {

inline constexpr int kGtpLayers = 3;

struct GtpParams {
  int width = 0;
  std::array<ConvLayer, 3> condition;
  std::array<LinearLayer, kGtpLayers> gamma_heads;
  std::array<LinearLayer, kGtpLayers> beta_heads;
  ConvLayer lift;  // 3 -> width
  std::array<ConvLayer, kGtpLayers> core;
  ConvLayer project;  // width -> 3, added to the input
};

template <typename T>
struct GtpOutput {
  Var<T> output;
  Var<T> condition;                       // z, (n, width, 1, 1)
  std::array<Var<T>, kGtpLayers + 1> features;  // F0..F3
  std::array<Var<T>, kGtpLayers> gamma;
  std::array<Var<T>, kGtpLayers> beta;
};

template <typename T>
GtpParams make_gtp(ParameterSet<T>& params, Rng& rng, int width, double output_scale,
                   const std::string& prefix = "gtp");

// F(l) = relu(W(l) * F(l-1) * gamma(l) + beta(l) + F(l-1)); output = L3 + project(F3).
template <typename T>
GtpOutput<T> gtp_forward(Tape<T>& tape, const Var<T>& low_res, const GtpParams& p);

}  // namespace tonemap
