#include "tonemap/pyramid.hpp"

#include "tonemap/errors.hpp"

namespace tonemap::pyramid {
namespace {

inline int64_t reflect(int64_t i, int64_t n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

// Separable 5-tap filter with `gain` applied once per axis; optional stride-2
// sampling of the output.
template <typename T>
Tensor<T> filter_separable(const Tensor<T>& in, double gain) {
  const int64_t h = in.h(), w = in.w(), planes = in.n() * in.c();
  Tensor<T> out(in.shape());
  std::vector<double> tmp(static_cast<size_t>(h * w));
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = in.data() + p * h * w;
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        double acc = 0;
        for (int k = -2; k <= 2; ++k) acc += kBinomial5[k + 2] * src[y * w + reflect(x + k, w)];
        tmp[y * w + x] = acc * gain;
      }
    }
    T* dst = out.data() + p * h * w;
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        double acc = 0;
        for (int k = -2; k <= 2; ++k) acc += kBinomial5[k + 2] * tmp[reflect(y + k, h) * w + x];
        dst[y * w + x] = static_cast<T>(acc * gain);
      }
    }
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> blur(const Tensor<T>& image) {
  return filter_separable(image, 1.0);
}

template <typename T>
Tensor<T> reduce(const Tensor<T>& image) {
  const Tensor<T> blurred = blur(image);
  const int64_t oh = (image.h() + 1) / 2, ow = (image.w() + 1) / 2;
  Tensor<T> out(Shape{image.n(), image.c(), oh, ow});
  for (int64_t p = 0; p < image.n() * image.c(); ++p) {
    const T* src = blurred.data() + p * image.h() * image.w();
    T* dst = out.data() + p * oh * ow;
    for (int64_t y = 0; y < oh; ++y) {
      for (int64_t x = 0; x < ow; ++x) dst[y * ow + x] = src[(2 * y) * image.w() + 2 * x];
    }
  }
  return out;
}

template <typename T>
Tensor<T> expand(const Tensor<T>& image, int64_t h, int64_t w) {
  if ((h + 1) / 2 != image.h() || (w + 1) / 2 != image.w()) {
    throw DimensionError("expand: " + image.shape().str() + " is not the reduction of " + std::to_string(h) + "x" +
                         std::to_string(w));
  }
  Tensor<T> up(Shape{image.n(), image.c(), h, w});
  for (int64_t p = 0; p < image.n() * image.c(); ++p) {
    const T* src = image.data() + p * image.h() * image.w();
    T* dst = up.data() + p * h * w;
    for (int64_t y = 0; y < image.h(); ++y) {
      for (int64_t x = 0; x < image.w(); ++x) dst[(2 * y) * w + 2 * x] = src[y * image.w() + x];
    }
  }
  return filter_separable(up, 2.0);
}

template <typename T>
std::vector<Tensor<T>> gaussian_pyramid(const Tensor<T>& image, int levels) {
  if (levels < 1) throw DimensionError("gaussian_pyramid: levels must be >= 1");
  const int64_t min_side = std::min(image.h(), image.w());
  if (min_side < 1 || (levels > 1 && (int64_t{1} << (levels - 1)) > min_side)) {
    throw DimensionError("gaussian_pyramid: " + std::to_string(levels) + " levels too many for " +
                         image.shape().str());
  }
  std::vector<Tensor<T>> out;
  out.push_back(image);
  for (int l = 1; l < levels; ++l) out.push_back(reduce(out.back()));
  return out;
}

template <typename T>
LaplacianPyramid<T> laplacian_decompose(const Tensor<T>& image, int levels) {
  auto gauss = gaussian_pyramid(image, levels);
  LaplacianPyramid<T> pyr;
  for (int l = 0; l + 1 < levels; ++l) {
    Tensor<T> band = gauss[l];
    band.axpy(T(-1), expand(gauss[l + 1], gauss[l].h(), gauss[l].w()));
    pyr.bands.push_back(std::move(band));
  }
  pyr.base = std::move(gauss.back());
  return pyr;
}

template <typename T>
Tensor<T> laplacian_collapse(const LaplacianPyramid<T>& pyr) {
  Tensor<T> image = pyr.base;
  for (auto it = pyr.bands.rbegin(); it != pyr.bands.rend(); ++it) {
    if (it->n() != image.n() || it->c() != image.c()) {
      throw DimensionError("laplacian_collapse: band " + it->shape().str() + " vs " + image.shape().str());
    }
    Tensor<T> next = expand(image, it->h(), it->w());
    next.axpy(T(1), *it);
    image = std::move(next);
  }
  return image;
}

#define TONEMAP_INSTANTIATE(T)                                                     \
  template Tensor<T> blur(const Tensor<T>&);                                       \
  template Tensor<T> reduce(const Tensor<T>&);                                     \
  template Tensor<T> expand(const Tensor<T>&, int64_t, int64_t);                   \
  template std::vector<Tensor<T>> gaussian_pyramid(const Tensor<T>&, int);         \
  template LaplacianPyramid<T> laplacian_decompose(const Tensor<T>&, int);         \
  template Tensor<T> laplacian_collapse(const LaplacianPyramid<T>&);
TONEMAP_INSTANTIATE(float)
TONEMAP_INSTANTIATE(double)
#undef TONEMAP_INSTANTIATE

}  // namespace tonemap::pyramid
