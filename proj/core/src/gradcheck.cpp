#include "tonemap/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tonemap/rng.hpp"

namespace tonemap {
namespace {

template <typename T>
double evaluate(ParameterSet<T>& params, const LossFn<T>& loss_fn) {
  Tape<T> tape(&params);
  return static_cast<double>(loss_fn(tape).value()[0]);
}

std::vector<int64_t> pick_coordinates(int64_t numel, int samples, uint64_t seed) {
  std::vector<int64_t> all(static_cast<size_t>(numel));
  std::iota(all.begin(), all.end(), 0);
  if (numel <= samples) return all;
  Rng rng(seed);
  for (int64_t i = 0; i < samples; ++i) {
    const int64_t j = i + static_cast<int64_t>(rng.below(static_cast<uint64_t>(numel - i)));
    std::swap(all[i], all[j]);
  }
  all.resize(static_cast<size_t>(samples));
  std::sort(all.begin(), all.end());
  return all;
}

struct Sample {
  double analytic, numeric;
};

// Central differences at `coords`; coordinates whose one-sided slopes
// disagree are recorded as kinks in `report` and skipped.
template <typename T>
std::vector<std::pair<int64_t, double>> central_differences(ParameterSet<T>& params, const LossFn<T>& loss_fn,
                                                            ParamId param, const std::vector<int64_t>& coords,
                                                            const GradCheckOptions& options, GradCheckReport& report) {
  const double f0 = evaluate(params, loss_fn);
  Tensor<T>& value = params.value(param);
  std::vector<std::pair<int64_t, double>> out;
  for (int64_t idx : coords) {
    const T orig = value[idx];
    const T up = static_cast<T>(orig + options.step);
    const T down = static_cast<T>(orig - options.step);
    value[idx] = up;
    const double fp = evaluate(params, loss_fn);
    value[idx] = down;
    const double fm = evaluate(params, loss_fn);
    value[idx] = orig;
    const double hp = static_cast<double>(up) - static_cast<double>(orig);
    const double hm = static_cast<double>(orig) - static_cast<double>(down);
    const double fwd = (fp - f0) / hp;
    const double bwd = (f0 - fm) / hm;
    const double mag = std::max({std::abs(fwd), std::abs(bwd), 1e-12});
    if (std::abs(fwd - bwd) > options.kink_tolerance * mag) {
      report.kink_indices.push_back(idx);
      continue;
    }
    out.emplace_back(idx, (fp - fm) / (hp + hm));
  }
  return out;
}

void summarize(const std::vector<Sample>& kept, const GradCheckOptions& options, GradCheckReport& report) {
  report.excluded = static_cast<int>(report.kink_indices.size());
  report.checked = static_cast<int>(kept.size());
  for (const auto& s : kept) report.grad_scale = std::max(report.grad_scale, std::abs(s.analytic));
  for (const auto& s : kept) {
    const double err = std::abs(s.analytic - s.numeric);
    const double denom = std::max({std::abs(s.analytic), std::abs(s.numeric), report.grad_scale, 1e-30});
    report.max_abs_error = std::max(report.max_abs_error, err);
    report.max_rel_error = std::max(report.max_rel_error, err / denom);
  }
  report.passed = report.checked > 0 && report.max_rel_error < options.tolerance;
}

template <typename T>
Tensor<T> analytic_gradient(ParameterSet<T>& params, const LossFn<T>& loss_fn, ParamId param) {
  params.zero_grad();
  Tape<T> tape(&params);
  Var<T> loss = loss_fn(tape);
  tape.backward(loss);
  return params.grad(param);
}

}  // namespace

template <typename T>
GradCheckReport finite_diff_check(ParameterSet<T>& params, const LossFn<T>& loss_fn, ParamId param,
                                  const GradCheckOptions& options) {
  GradCheckReport report;
  report.parameter = params.name(param);
  const Tensor<T> analytic = analytic_gradient(params, loss_fn, param);
  const auto coords =
      pick_coordinates(params.value(param).numel(), options.samples, options.seed + static_cast<uint64_t>(param));
  std::vector<Sample> kept;
  for (const auto& [idx, numeric] : central_differences(params, loss_fn, param, coords, options, report))
    kept.push_back({static_cast<double>(analytic[idx]), numeric});
  summarize(kept, options, report);
  return report;
}

std::vector<GradCheckReport> mixed_precision_check_all(ParameterSet<float>& params, const LossFn<float>& loss_fn,
                                                       const LossFn<double>& reference_fn,
                                                       const GradCheckOptions& options) {
  ParameterSet<double> mirror = params.cast<double>();
  std::vector<GradCheckReport> out;
  for (size_t i = 0; i < params.size(); ++i) {
    const auto param = static_cast<ParamId>(i);
    GradCheckReport report;
    report.parameter = params.name(param);
    const Tensorf analytic = analytic_gradient(params, loss_fn, param);
    const auto coords =
        pick_coordinates(params.value(param).numel(), options.samples, options.seed + static_cast<uint64_t>(param));
    std::vector<Sample> kept;
    for (const auto& [idx, numeric] : central_differences(mirror, reference_fn, param, coords, options, report))
      kept.push_back({static_cast<double>(analytic[idx]), numeric});
    summarize(kept, options, report);
    out.push_back(std::move(report));
  }
  return out;
}

template <typename T>
std::vector<GradCheckReport> finite_diff_check_all(ParameterSet<T>& params, const LossFn<T>& loss_fn,
                                                   const GradCheckOptions& options) {
  std::vector<GradCheckReport> out;
  for (size_t i = 0; i < params.size(); ++i) {
    out.push_back(finite_diff_check(params, loss_fn, static_cast<ParamId>(i), options));
  }
  return out;
}

template GradCheckReport finite_diff_check(ParameterSet<float>&, const LossFn<float>&, ParamId,
                                           const GradCheckOptions&);
template GradCheckReport finite_diff_check(ParameterSet<double>&, const LossFn<double>&, ParamId,
                                           const GradCheckOptions&);
template std::vector<GradCheckReport> finite_diff_check_all(ParameterSet<float>&, const LossFn<float>&,
                                                            const GradCheckOptions&);
template std::vector<GradCheckReport> finite_diff_check_all(ParameterSet<double>&, const LossFn<double>&,
                                                            const GradCheckOptions&);

}  // namespace tonemap
