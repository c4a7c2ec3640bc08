#pragma once

#include <vector>

#include "tonemap/autodiff.hpp"

// Differentiable operations recorded on a Tape. Every op validates shapes
// and throws DimensionError on mismatch; backward closures are attached only
// when an operand requires a gradient.
namespace tonemap::ops {

enum class Padding { kZeros, kReflect };

struct Conv2dOptions {
  int stride = 1;
  int pad = 0;
  Padding padding = Padding::kZeros;
};

// weight (out_c, in_c, k, k); bias (1, out_c, 1, 1) or an invalid Var for none.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, Conv2dOptions opt = {});

// Same fixed 2-D kernel (1, 1, kh, kw) applied to every channel. No kernel gradient.
template <typename T>
Var<T> depthwise_filter(const Var<T>& x, const Tensor<T>& kernel, int pad,
                        Padding padding = Padding::kZeros);

// x (n, d, 1, 1), weight (out, d, 1, 1), bias (1, out, 1, 1) -> (n, out, 1, 1).
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

template <typename T>
Var<T> maxpool2(const Var<T>& x);
template <typename T>
Var<T> avgpool2(const Var<T>& x);
template <typename T>
Var<T> global_avg_pool(const Var<T>& x);
template <typename T>
Var<T> adaptive_avg_pool(const Var<T>& x, int out_h, int out_w);

// Bilinear, align-corners-false, exact 2x.
template <typename T>
Var<T> upsample_bilinear2x(const Var<T>& x);
// Antialiased bilinear (triangle filter of width `factor`) reduction by an integer factor.
template <typename T>
Var<T> downsample_bilinear(const Var<T>& x, int factor);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> div(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> add_scalar(const Var<T>& a, T s);
template <typename T>
Var<T> mul_scalar(const Var<T>& a, T s);
// x^p for x > 0; inputs below `floor` are clamped (zero gradient there).
template <typename T>
Var<T> pow_scalar(const Var<T>& x, T p, T floor = T(1e-6));

// x * gamma + beta with gamma, beta of shape (n, c, 1, 1) broadcast per channel.
template <typename T>
Var<T> scale_shift(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta);

template <typename T>
Var<T> relu(const Var<T>& x);
template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope);
template <typename T>
Var<T> abs(const Var<T>& x);
template <typename T>
Var<T> square(const Var<T>& x);
template <typename T>
Var<T> clamp(const Var<T>& x, T lo, T hi);

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);
template <typename T>
Var<T> slice_channels(const Var<T>& x, int begin, int count);
template <typename T>
Var<T> crop(const Var<T>& x, int top, int left, int h, int w);
template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape);
// (n, c, h, w) -> (n*h*w, c, 1, 1), row i = batch-major then raster order.
template <typename T>
Var<T> spatial_to_batch(const Var<T>& x);

// Per-(n, c) plane normalisation followed by learned per-channel affine
// (weight/bias of shape (1, c, 1, 1)).
template <typename T>
Var<T> instance_norm(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, T eps = T(1e-5));

// Reductions to a (1,1,1,1) scalar.
template <typename T>
Var<T> sum(const Var<T>& x);
template <typename T>
Var<T> mean(const Var<T>& x);
// Mean over spatial and batch dims, one value per channel: (1, c, 1, 1).
template <typename T>
Var<T> channel_mean(const Var<T>& x);

}  // namespace tonemap::ops
