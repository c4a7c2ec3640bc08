#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tonemap/autodiff.hpp"

namespace tonemap {

template <typename T>
using LossFn = std::function<Var<T>(Tape<T>&)>;

struct GradCheckOptions {
  double step = 1e-3;
  double tolerance = 1e-3;
  int samples = 24;
  uint64_t seed = 7;
  // One-sided slopes differing by more than this (relative) mark a kink:
  // relu at 0, maxpool ties, LUT lattice planes, clamp boundaries.
  double kink_tolerance = 1e-2;
};

struct GradCheckReport {
  std::string parameter;
  int checked = 0;
  int excluded = 0;
  std::vector<int64_t> kink_indices;
  // max_i |a_i - n_i| / max(|a_i|, |n_i|, max_j |a_j|) over checked coordinates.
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  double grad_scale = 0.0;
  bool passed = false;
};

// Central finite differences of `loss_fn` w.r.t. coordinates of one parameter,
// compared against the reverse-mode gradient. `loss_fn` must be deterministic
// and build its graph from `params`.
template <typename T>
GradCheckReport finite_diff_check(ParameterSet<T>& params, const LossFn<T>& loss_fn, ParamId param,
                                  const GradCheckOptions& options = {});

// Checks every parameter in the set; convenience for whole-model audits.
template <typename T>
std::vector<GradCheckReport> finite_diff_check_all(ParameterSet<T>& params, const LossFn<T>& loss_fn,
                                                   const GradCheckOptions& options = {});

// Reverse-mode gradients of a float graph against central differences of a
// double-precision `reference_fn` evaluated on a double copy of `params`.
// Separates float backprop error from float finite-difference noise.
std::vector<GradCheckReport> mixed_precision_check_all(ParameterSet<float>& params, const LossFn<float>& loss_fn,
                                                       const LossFn<double>& reference_fn,
                                                       const GradCheckOptions& options = {});

}  // namespace tonemap
