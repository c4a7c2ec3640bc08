#include "tonemap/lut.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "tonemap/errors.hpp"

namespace tonemap {
namespace {

int lattice_size_from_nodes(int64_t nodes) {
  const int v = static_cast<int>(std::lround(std::cbrt(static_cast<double>(nodes))));
  if (int64_t{v} * v * v != nodes || v < 2) {
    throw DimensionError("lut: " + std::to_string(nodes) + " entries per channel is not a cube >= 8");
  }
  return v;
}

// Cell origin and fractional offsets for one clamped coordinate.
struct AxisCoord {
  int index;
  double frac;
  bool inside;  // false when the input was clamped
};

inline AxisCoord axis_coord(double v, int size) {
  AxisCoord a{0, 0.0, v >= 0.0 && v <= 1.0};
  const double c = std::clamp(v, 0.0, 1.0) * (size - 1);
  a.index = std::min(static_cast<int>(std::floor(c)), size - 2);
  a.frac = c - a.index;
  return a;
}

struct Axis1D {
  int i0, i1;
  double f;
};

inline Axis1D blend_axis(double pos, int64_t extent, int grid) {
  if (grid == 1) return {0, 0, 0.0};
  double t = (pos + 0.5) * grid / static_cast<double>(extent) - 0.5;
  t = std::clamp(t, 0.0, static_cast<double>(grid - 1));
  const int i0 = std::min(static_cast<int>(std::floor(t)), grid - 2);
  return {i0, i0 + 1, t - i0};
}

}  // namespace

BlendWeights blend_weights(double y, double x, int64_t h, int64_t w, int grid) {
  if (grid < 1) throw DimensionError("blend_weights: grid must be >= 1");
  const Axis1D ay = blend_axis(y, h, grid);
  const Axis1D ax = blend_axis(x, w, grid);
  BlendWeights bw;
  const int rows[2] = {ay.i0, ay.i1};
  const int cols[2] = {ax.i0, ax.i1};
  const double wy[2] = {1.0 - ay.f, ay.f};
  const double wx[2] = {1.0 - ax.f, ax.f};
  const int ny = grid == 1 ? 1 : 2, nx = grid == 1 ? 1 : 2;
  for (int a = 0; a < ny; ++a) {
    for (int b = 0; b < nx; ++b) {
      bw.patch[bw.count] = rows[a] * grid + cols[b];
      bw.weight[bw.count] = wy[a] * wx[b];
      ++bw.count;
    }
  }
  return bw;
}

template <typename T>
Lut3D<T>::Lut3D(int size) : size_(size), entries_(Shape{1, 3, int64_t{size} * size * size, 1}) {
  if (size < 2) throw DimensionError("lut: size must be >= 2");
}

template <typename T>
Lut3D<T>::Lut3D(int size, Tensor<T> entries) : size_(size), entries_(std::move(entries)) {
  if (size < 2) throw DimensionError("lut: size must be >= 2");
  if (entries_.numel() != 3 * nodes()) throw DimensionError("lut: entry count does not match size");
  entries_ = entries_.reshaped(Shape{1, 3, nodes(), 1});
}

template <typename T>
Lut3D<T> Lut3D<T>::identity(int size) {
  Lut3D lut(size);
  const double step = 1.0 / (size - 1);
  for (int b = 0; b < size; ++b) {
    for (int g = 0; g < size; ++g) {
      for (int r = 0; r < size; ++r) {
        lut.at(0, r, g, b) = static_cast<T>(r * step);
        lut.at(1, r, g, b) = static_cast<T>(g * step);
        lut.at(2, r, g, b) = static_cast<T>(b * step);
      }
    }
  }
  return lut;
}

template <typename T>
std::array<T, 3> Lut3D<T>::lookup(T r, T g, T b) const {
  const AxisCoord ar = axis_coord(r, size_), ag = axis_coord(g, size_), ab = axis_coord(b, size_);
  std::array<double, 3> acc{};
  for (int corner = 0; corner < 8; ++corner) {
    const int dr = corner & 1, dg = (corner >> 1) & 1, db = (corner >> 2) & 1;
    const double w = (dr ? ar.frac : 1 - ar.frac) * (dg ? ag.frac : 1 - ag.frac) * (db ? ab.frac : 1 - ab.frac);
    for (int c = 0; c < 3; ++c) acc[c] += w * at(c, ar.index + dr, ag.index + dg, ab.index + db);
  }
  return {static_cast<T>(acc[0]), static_cast<T>(acc[1]), static_cast<T>(acc[2])};
}

template <typename T>
Lut3D<T> combine_luts(const std::vector<T>& weights, const std::vector<Lut3D<T>>& bank) {
  if (weights.size() != bank.size() || bank.empty()) {
    throw DimensionError("combine_luts: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(bank.size()) + " basis LUTs");
  }
  Lut3D<T> out(bank.front().size());
  for (size_t r = 0; r < bank.size(); ++r) {
    if (bank[r].size() != out.size()) throw DimensionError("combine_luts: basis sizes differ");
    out.entries().axpy(weights[r], bank[r].entries());
  }
  return out;
}

template <typename T>
Tensor<T> apply_lut(const Tensor<T>& image, const Lut3D<T>& lut) {
  if (image.c() != 3) throw DimensionError("apply_lut: image must have 3 channels");
  Tensor<T> out(image.shape());
  const int64_t hw = image.shape().plane();
  for (int64_t b = 0; b < image.n(); ++b) {
    const T* r = image.plane(b, 0);
    const T* g = image.plane(b, 1);
    const T* bl = image.plane(b, 2);
    for (int64_t i = 0; i < hw; ++i) {
      const auto v = lut.lookup(r[i], g[i], bl[i]);
      for (int c = 0; c < 3; ++c) out.plane(b, c)[i] = v[c];
    }
  }
  return out;
}

template <typename T>
Tensor<T> blend_patches(const std::vector<Tensor<T>>& patch_outputs, int grid) {
  if (static_cast<int>(patch_outputs.size()) != grid * grid) {
    throw DimensionError("blend_patches: expected " + std::to_string(grid * grid) + " patch outputs");
  }
  const Shape s = patch_outputs.front().shape();
  for (const auto& p : patch_outputs) require_same_shape(p.shape(), s, "blend_patches");
  Tensor<T> out(s);
  for (int64_t y = 0; y < s.h; ++y) {
    for (int64_t x = 0; x < s.w; ++x) {
      const BlendWeights bw = blend_weights(static_cast<double>(y), static_cast<double>(x), s.h, s.w, grid);
      for (int64_t b = 0; b < s.n; ++b) {
        for (int64_t c = 0; c < s.c; ++c) {
          double acc = 0;
          for (int k = 0; k < bw.count; ++k) acc += bw.weight[k] * patch_outputs[bw.patch[k]].at(b, c, y, x);
          out.at(b, c, y, x) = static_cast<T>(acc);
        }
      }
    }
  }
  return out;
}

namespace ops {

template <typename T>
Var<T> combine_luts(const Var<T>& weights, const Var<T>& bank) {
  using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Tensor<T>& wv = weights.value();
  const Tensor<T>& bv = bank.value();
  const int64_t k = wv.n();
  const int64_t r = bv.n();
  if (wv.c() * wv.h() * wv.w() != r) {
    throw DimensionError("combine_luts: weights " + wv.shape().str() + " vs bank " + bv.shape().str());
  }
  const int64_t m = bv.c() * bv.h() * bv.w();
  Tensor<T> out(Shape{k, bv.c(), bv.h(), bv.w()});
  Eigen::Map<MatR>(out.data(), k, m).noalias() =
      Eigen::Map<const MatR>(wv.data(), k, r) * Eigen::Map<const MatR>(bv.data(), r, m);
  const int wid = weights.id(), bid = bank.id();
  return weights.tape().record(std::move(out), {weights, bank}, [wid, bid, k, r, m](Tape<T>& tape, const Tensor<T>& g) {
    Eigen::Map<const MatR> G(g.data(), k, m);
    if (tape.requires_grad(wid)) {
      Eigen::Map<MatR>(tape.grad_buffer(wid).data(), k, r).noalias() +=
          G * Eigen::Map<const MatR>(tape.value(bid).data(), r, m).transpose();
    }
    if (tape.requires_grad(bid)) {
      Eigen::Map<MatR>(tape.grad_buffer(bid).data(), r, m).noalias() +=
          Eigen::Map<const MatR>(tape.value(wid).data(), k, r).transpose() * G;
    }
  });
}

template <typename T>
Var<T> apply_luts_blended(const Var<T>& image, const Var<T>& luts, int grid) {
  const Tensor<T>& img = image.value();
  const Tensor<T>& lv = luts.value();
  if (img.c() != 3) throw DimensionError("apply_luts: image must have 3 channels, got " + img.shape().str());
  if (grid < 1) throw DimensionError("apply_luts: grid must be >= 1");
  if (lv.c() != 3 || lv.w() != 1) throw DimensionError("apply_luts: luts must be (k, 3, V^3, 1)");
  const int64_t tiles = int64_t{grid} * grid;
  const bool shared = lv.n() == tiles;
  if (!shared && lv.n() != img.n() * tiles) {
    throw DimensionError("apply_luts: " + std::to_string(lv.n()) + " LUTs for batch " + std::to_string(img.n()) +
                         " and grid " + std::to_string(grid));
  }
  const int size = lattice_size_from_nodes(lv.h());
  const int64_t nodes = lv.h();
  const int64_t h = img.h(), w = img.w(), hw = h * w;

  std::vector<BlendWeights> pixel_weights(static_cast<size_t>(hw));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      pixel_weights[y * w + x] = blend_weights(static_cast<double>(y), static_cast<double>(x), h, w, grid);
    }
  }

  auto lut_base = [shared, tiles, nodes](const T* data, int64_t batch, int patch) {
    const int64_t idx = shared ? patch : batch * tiles + patch;
    return data + idx * 3 * nodes;
  };

  Tensor<T> out(img.shape());
  for (int64_t b = 0; b < img.n(); ++b) {
    const T* pr = img.plane(b, 0);
    const T* pg = img.plane(b, 1);
    const T* pb = img.plane(b, 2);
    for (int64_t i = 0; i < hw; ++i) {
      const AxisCoord ar = axis_coord(pr[i], size), ag = axis_coord(pg[i], size), ab = axis_coord(pb[i], size);
      const BlendWeights& bw = pixel_weights[i];
      double acc[3] = {0, 0, 0};
      for (int corner = 0; corner < 8; ++corner) {
        const int dr = corner & 1, dg = (corner >> 1) & 1, db = (corner >> 2) & 1;
        const double cw =
            (dr ? ar.frac : 1 - ar.frac) * (dg ? ag.frac : 1 - ag.frac) * (db ? ab.frac : 1 - ab.frac);
        const int64_t node = Lut3D<T>::node_index(size, ar.index + dr, ag.index + dg, ab.index + db);
        for (int k = 0; k < bw.count; ++k) {
          const T* L = lut_base(lv.data(), b, bw.patch[k]);
          const double wk = cw * bw.weight[k];
          for (int c = 0; c < 3; ++c) acc[c] += wk * L[c * nodes + node];
        }
      }
      for (int c = 0; c < 3; ++c) out.plane(b, c)[i] = static_cast<T>(acc[c]);
    }
  }

  const int iid = image.id(), lid = luts.id();
  return image.tape().record(
      std::move(out), {image, luts},
      [iid, lid, size, nodes, hw, lut_base, pixel_weights = std::move(pixel_weights)](Tape<T>& tape,
                                                                                      const Tensor<T>& g) {
        const Tensor<T>& img = tape.value(iid);
        const Tensor<T>& lv = tape.value(lid);
        const bool need_img = tape.requires_grad(iid);
        const bool need_lut = tape.requires_grad(lid);
        T* dl = need_lut ? tape.grad_buffer(lid).data() : nullptr;
        for (int64_t b = 0; b < img.n(); ++b) {
          const T* pr = img.plane(b, 0);
          const T* pg = img.plane(b, 1);
          const T* pb = img.plane(b, 2);
          for (int64_t i = 0; i < hw; ++i) {
            const double go[3] = {g.plane(b, 0)[i], g.plane(b, 1)[i], g.plane(b, 2)[i]};
            const AxisCoord ar = axis_coord(pr[i], size), ag = axis_coord(pg[i], size),
                            ab = axis_coord(pb[i], size);
            const BlendWeights& bw = pixel_weights[i];
            double dpos[3] = {0, 0, 0};
            for (int corner = 0; corner < 8; ++corner) {
              const int dr = corner & 1, dg = (corner >> 1) & 1, db = (corner >> 2) & 1;
              const double wr = dr ? ar.frac : 1 - ar.frac;
              const double wg = dg ? ag.frac : 1 - ag.frac;
              const double wb = db ? ab.frac : 1 - ab.frac;
              const double cw = wr * wg * wb;
              const double sr = dr ? 1.0 : -1.0, sg = dg ? 1.0 : -1.0, sb = db ? 1.0 : -1.0;
              const int64_t node = Lut3D<T>::node_index(size, ar.index + dr, ag.index + dg, ab.index + db);
              for (int k = 0; k < bw.count; ++k) {
                const int64_t offset = lut_base(lv.data(), b, bw.patch[k]) - lv.data();
                const double bk = bw.weight[k];
                double corner_dot = 0;
                for (int c = 0; c < 3; ++c) {
                  const double val = lv[offset + c * nodes + node];
                  corner_dot += go[c] * val;
                  if (need_lut) dl[offset + c * nodes + node] += static_cast<T>(go[c] * cw * bk);
                }
                if (need_img) {
                  dpos[0] += bk * corner_dot * sr * wg * wb;
                  dpos[1] += bk * corner_dot * wr * sg * wb;
                  dpos[2] += bk * corner_dot * wr * wg * sb;
                }
              }
            }
            if (need_img) {
              Tensor<T>& di = tape.grad_buffer(iid);
              const bool inside[3] = {ar.inside, ag.inside, ab.inside};
              for (int c = 0; c < 3; ++c) {
                if (inside[c]) di.plane(b, c)[i] += static_cast<T>(dpos[c] * (size - 1));
              }
            }
          }
        }
      });
}

}  // namespace ops

#define TONEMAP_INSTANTIATE(T)                                                              \
  template class Lut3D<T>;                                                                  \
  template Lut3D<T> combine_luts(const std::vector<T>&, const std::vector<Lut3D<T>>&);      \
  template Tensor<T> apply_lut(const Tensor<T>&, const Lut3D<T>&);                          \
  template Tensor<T> blend_patches(const std::vector<Tensor<T>>&, int);                     \
  template Var<T> ops::combine_luts(const Var<T>&, const Var<T>&);                          \
  template Var<T> ops::apply_luts_blended(const Var<T>&, const Var<T>&, int);
TONEMAP_INSTANTIATE(float)
TONEMAP_INSTANTIATE(double)
#undef TONEMAP_INSTANTIATE

}  // namespace tonemap
