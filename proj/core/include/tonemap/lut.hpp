#pragma once

#include <array>
#include <vector>

#include "tonemap/autodiff.hpp"

namespace tonemap {

// RGB -> RGB lattice over [0,1]^3 with `size` nodes per axis. Entries are a
// (1, 3, size^3, 1) tensor laid out channel-major, red index fastest:
// node (r, g, b) lives at r + size * (g + size * b).
template <typename T>
class Lut3D {
 public:
  Lut3D() = default;
  explicit Lut3D(int size);
  Lut3D(int size, Tensor<T> entries);

  static Lut3D identity(int size);

  int size() const { return size_; }
  int64_t nodes() const { return int64_t{size_} * size_ * size_; }
  static int64_t node_index(int size, int r, int g, int b) { return r + int64_t{size} * (g + int64_t{size} * b); }

  T& at(int channel, int r, int g, int b) { return entries_[channel * nodes() + node_index(size_, r, g, b)]; }
  T at(int channel, int r, int g, int b) const { return entries_[channel * nodes() + node_index(size_, r, g, b)]; }

  const Tensor<T>& entries() const { return entries_; }
  Tensor<T>& entries() { return entries_; }

  // Trilinear interpolation; the input is clamped to [0,1]^3 first.
  std::array<T, 3> lookup(T r, T g, T b) const;

 private:
  int size_ = 0;
  Tensor<T> entries_;
};

// Bilinear weights of one pixel w.r.t. an N x N grid of equal tiles, using
// tile centres as anchors. Pixels outside the outermost centres take clamped
// weights. Weights sum to one.
struct BlendWeights {
  int count = 0;
  std::array<int, 4> patch{};
  std::array<double, 4> weight{};
};

// (y, x) are continuous pixel coordinates (pixel centres at integers).
BlendWeights blend_weights(double y, double x, int64_t h, int64_t w, int grid);

// Σ_r w_r * bank_r over plain values (reference path).
template <typename T>
Lut3D<T> combine_luts(const std::vector<T>& weights, const std::vector<Lut3D<T>>& bank);

// Apply one LUT to a whole (n, 3, h, w) image (reference path).
template <typename T>
Tensor<T> apply_lut(const Tensor<T>& image, const Lut3D<T>& lut);

// patch_outputs[i] is LUT_i applied to the full image; returns the bilinear
// patch blend.
template <typename T>
Tensor<T> blend_patches(const std::vector<Tensor<T>>& patch_outputs, int grid);

namespace ops {

// weights (k, R, 1, 1) x bank (R, 3, V^3, 1) -> (k, 3, V^3, 1).
template <typename T>
Var<T> combine_luts(const Var<T>& weights, const Var<T>& bank);

// image (n, 3, h, w); luts (n * grid^2, 3, V^3, 1) or (grid^2, 3, V^3, 1)
// shared across the batch. Each pixel is looked up in the <= 4 LUTs of the
// nearest tile centres and blended bilinearly. Inputs are clamped to [0,1].
template <typename T>
Var<T> apply_luts_blended(const Var<T>& image, const Var<T>& luts, int grid);

}  // namespace ops

}  // namespace tonemap
