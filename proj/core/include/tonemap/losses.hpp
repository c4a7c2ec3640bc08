#pragma once

#include <array>
#include <memory>
#include <vector>

#include "tonemap/ldp.hpp"
#include "tonemap/model.hpp"

namespace tonemap {

// Weights of the reconstruction, MS-SSIM, high-frequency and perceptual terms.
struct LossWeights {
  double reconstruction = 1.0;
  double ssim = 0.4;
  double high_frequency = 1.0;
  double perceptual = 0.05;

  // Throws ConfigError on a negative weight or when all are zero.
  void validate() const;
};

template <typename T>
struct LossParts {
  Var<T> reconstruction;
  Var<T> ssim;
  Var<T> high_frequency;
  Var<T> perceptual;
};

// Fixed feature maps compared by the perceptual loss. Implementations must
// not register trainable parameters.
template <typename T>
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<Var<T>> features(Tape<T>& tape, const Var<T>& image) const = 0;
};

// Oriented Sobel/diagonal gradients and a binomial blur, per channel, at
// full and half resolution.
template <typename T>
class AnalyticFeatureExtractor final : public FeatureExtractor<T> {
 public:
  AnalyticFeatureExtractor();
  std::vector<Var<T>> features(Tape<T>& tape, const Var<T>& image) const override;

 private:
  std::vector<Tensor<T>> kernels_;
};

// Σ_k mean|T_k - gauss_k(Y)| over k = 0..levels-1 (levels[0] full resolution).
template <typename T>
Var<T> loss_re(Tape<T>& tape, const std::vector<Var<T>>& levels, const Tensor<T>& target);

struct MsSsimInfo {
  int scales = 0;
};

// 1 - MS-SSIM with the published 5-scale weights truncated to the scales that
// fit an 11-tap window and renormalised.
template <typename T>
Var<T> loss_msssim(Tape<T>& tape, const Var<T>& prediction, const Tensor<T>& target, MsSsimInfo* info = nullptr);

// Σ_k mean|H_k - lap_k(Y)| with lap the 4-level Laplacian pyramid of Y.
template <typename T>
Var<T> loss_hf(Tape<T>& tape, const PyramidStack<T>& stack, const Tensor<T>& target);

// Σ over feature maps of mean squared difference.
template <typename T>
Var<T> loss_perceptual(Tape<T>& tape, const Var<T>& prediction, const Tensor<T>& target,
                       const FeatureExtractor<T>& extractor);

template <typename T>
Var<T> total_loss(const LossParts<T>& parts, const LossWeights& weights);

// Evaluates all four terms for a pipeline pass against target Y.
template <typename T>
LossParts<T> compute_loss_parts(Tape<T>& tape, const PipelineOutputs<T>& out, const Tensor<T>& target,
                                const FeatureExtractor<T>& extractor);

inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

// Largest scale count (<= 5) such that the smallest side at the coarsest scale
// still holds an 11-tap window. 0 when even one scale does not fit.
int msssim_scale_count(int64_t h, int64_t w);

}  // namespace tonemap
