#include "tonemap/optim.hpp"

#include <cmath>

#include "tonemap/errors.hpp"

namespace tonemap {

template <typename T>
OptimState<T>::OptimState(const ParameterSet<T>& params, AdamWConfig cfg) : config(cfg) {
  for (size_t i = 0; i < params.size(); ++i) {
    first_moment.emplace_back(params.value(static_cast<ParamId>(i)).shape());
    second_moment.emplace_back(params.value(static_cast<ParamId>(i)).shape());
  }
}

template <typename T>
void adamw_step(OptimState<T>& state, ParameterSet<T>& params, double lr_scale) {
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("optimizer state has " + std::to_string(state.first_moment.size()) +
                         " slots, parameter set has " + std::to_string(params.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const auto id = static_cast<ParamId>(i);
    require_same_shape(state.first_moment[i].shape(), params.value(id).shape(), "adamw moment");
    if (!params.grad(id).all_finite()) {
      throw NumericError("adamw: non-finite gradient for parameter '" + params.name(id) + "'");
    }
  }
  const AdamWConfig& c = state.config;
  state.step += 1;
  const double lr = c.lr * lr_scale;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const double decay = 1.0 - lr * c.weight_decay;
  for (size_t i = 0; i < params.size(); ++i) {
    const auto id = static_cast<ParamId>(i);
    T* p = params.value(id).data();
    const T* g = params.grad(id).data();
    T* m = state.first_moment[i].data();
    T* v = state.second_moment[i].data();
    const int64_t count = params.value(id).numel();
    for (int64_t k = 0; k < count; ++k) {
      const double gk = g[k];
      const double mk = c.beta1 * m[k] + (1.0 - c.beta1) * gk;
      const double vk = c.beta2 * v[k] + (1.0 - c.beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double mhat = mk / bc1;
      const double vhat = vk / bc2;
      p[k] = static_cast<T>(p[k] * decay - lr * mhat / (std::sqrt(vhat) + c.eps));
    }
  }
}

template struct OptimState<float>;
template struct OptimState<double>;
template void adamw_step(OptimState<float>&, ParameterSet<float>&, double);
template void adamw_step(OptimState<double>&, ParameterSet<double>&, double);

}  // namespace tonemap
