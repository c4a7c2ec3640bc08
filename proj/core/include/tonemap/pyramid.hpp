#pragma once

#include <array>
#include <vector>

#include "tonemap/tensor.hpp"

// Classical Burt-Adelson pyramids with the fixed 5-tap binomial kernel and
// reflect boundaries. These are fixed (non-learned) operators used as loss
// targets and as oracles for the learnable pyramid.
namespace tonemap::pyramid {

inline constexpr std::array<double, 5> kBinomial5 = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

template <typename T>
struct LaplacianPyramid {
  std::vector<Tensor<T>> bands;  // full resolution first
  Tensor<T> base;
};

// Separable 5-tap binomial blur, reflect padding.
template <typename T>
Tensor<T> blur(const Tensor<T>& image);

// Blur then keep even rows/columns; output extent ceil(h/2) x ceil(w/2).
template <typename T>
Tensor<T> reduce(const Tensor<T>& image);

// Zero-insertion upsample to (h, w) followed by a 4x-gain binomial blur.
template <typename T>
Tensor<T> expand(const Tensor<T>& image, int64_t h, int64_t w);

// levels >= 1; level 0 is the input. Throws DimensionError when the
// coarsest level would be smaller than 1x1.
template <typename T>
std::vector<Tensor<T>> gaussian_pyramid(const Tensor<T>& image, int levels);

// `levels` counts gaussian levels, so the result has levels-1 bands plus base.
template <typename T>
LaplacianPyramid<T> laplacian_decompose(const Tensor<T>& image, int levels);

template <typename T>
Tensor<T> laplacian_collapse(const LaplacianPyramid<T>& pyr);

}  // namespace tonemap::pyramid
