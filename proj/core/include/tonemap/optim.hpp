#pragma once

#include <cstdint>
#include <vector>

#include "tonemap/autodiff.hpp"

namespace tonemap {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double weight_decay = 1e-4;
  double eps = 1e-8;
};

// Moment buffers for every tensor of one ParameterSet.
template <typename T>
struct OptimState {
  AdamWConfig config;
  int64_t step = 0;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;

  OptimState() = default;
  OptimState(const ParameterSet<T>& params, AdamWConfig cfg);
};

// One decoupled-weight-decay Adam update using the gradients stored in
// `params`. All gradients are validated before anything is modified, so a
// NumericError leaves both parameters and state untouched. `lr_scale`
// multiplies the configured learning rate (schedules).
template <typename T>
void adamw_step(OptimState<T>& state, ParameterSet<T>& params, double lr_scale = 1.0);

}  // namespace tonemap
