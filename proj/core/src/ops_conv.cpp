#include <Eigen/Core>

#include "tonemap/errors.hpp"
#include "tonemap/ops.hpp"

namespace tonemap::ops {
namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

// Maps a possibly out-of-range coordinate into [0, n) or returns -1 (zero pad).
inline int64_t pad_index(int64_t i, int64_t n, Padding mode) {
  if (i >= 0 && i < n) return i;
  if (mode == Padding::kZeros) return -1;
  if (n == 1) return 0;
  if (i < 0) i = -i;
  if (i >= n) i = 2 * (n - 1) - i;
  return i;
}

struct ConvGeometry {
  int64_t in_c, h, w, k, stride, pad, out_h, out_w;
  Padding mode;
  int64_t rows() const { return in_c * k * k; }
  int64_t cols() const { return out_h * out_w; }
};

template <typename T>
void im2col(const T* src, const ConvGeometry& g, T* cols) {
  const int64_t ncols = g.cols();
  for (int64_t ci = 0; ci < g.in_c; ++ci) {
    const T* plane = src + ci * g.h * g.w;
    for (int64_t ky = 0; ky < g.k; ++ky) {
      for (int64_t kx = 0; kx < g.k; ++kx) {
        T* row = cols + ((ci * g.k + ky) * g.k + kx) * ncols;
        for (int64_t oy = 0; oy < g.out_h; ++oy) {
          const int64_t iy = pad_index(oy * g.stride - g.pad + ky, g.h, g.mode);
          T* dst = row + oy * g.out_w;
          if (iy < 0) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* line = plane + iy * g.w;
          for (int64_t ox = 0; ox < g.out_w; ++ox) {
            const int64_t ix = pad_index(ox * g.stride - g.pad + kx, g.w, g.mode);
            dst[ox] = ix < 0 ? T(0) : line[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* dst) {
  const int64_t ncols = g.cols();
  for (int64_t ci = 0; ci < g.in_c; ++ci) {
    T* plane = dst + ci * g.h * g.w;
    for (int64_t ky = 0; ky < g.k; ++ky) {
      for (int64_t kx = 0; kx < g.k; ++kx) {
        const T* row = cols + ((ci * g.k + ky) * g.k + kx) * ncols;
        for (int64_t oy = 0; oy < g.out_h; ++oy) {
          const int64_t iy = pad_index(oy * g.stride - g.pad + ky, g.h, g.mode);
          if (iy < 0) continue;
          T* line = plane + iy * g.w;
          const T* src = row + oy * g.out_w;
          for (int64_t ox = 0; ox < g.out_w; ++ox) {
            const int64_t ix = pad_index(ox * g.stride - g.pad + kx, g.w, g.mode);
            if (ix >= 0) line[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, Conv2dOptions opt) {
  const Tensor<T>& in = x.value();
  const Tensor<T>& wt = weight.value();
  if (wt.h() != wt.w()) throw DimensionError("conv2d: kernel must be square, got " + wt.shape().str());
  if (wt.c() != in.c()) {
    throw DimensionError("conv2d: weight expects " + std::to_string(wt.c()) +
                         " input channels, input has " + std::to_string(in.c()));
  }
  if (opt.stride < 1 || opt.pad < 0) throw DimensionError("conv2d: stride must be >= 1 and pad >= 0");
  if (opt.padding == Padding::kReflect && (opt.pad >= in.h() || opt.pad >= in.w()) && opt.pad > 0 &&
      (in.h() > 1 || in.w() > 1)) {
    throw DimensionError("conv2d: reflect pad larger than input");
  }
  if (bias.valid() && bias.value().numel() != wt.n()) {
    throw DimensionError("conv2d: bias length does not match output channels");
  }
  ConvGeometry g{in.c(), in.h(), in.w(), wt.h(), opt.stride, opt.pad, 0, 0, opt.padding};
  g.out_h = (g.h + 2 * g.pad - g.k) / g.stride + 1;
  g.out_w = (g.w + 2 * g.pad - g.k) / g.stride + 1;
  if (g.h + 2 * g.pad < g.k || g.w + 2 * g.pad < g.k) {
    throw DimensionError("conv2d: kernel larger than padded input " + in.shape().str());
  }
  const int64_t out_c = wt.n();
  const int64_t K = g.rows();
  const int64_t P = g.cols();
  const bool direct = g.k == 1 && g.stride == 1 && g.pad == 0;

  Tensor<T> out(Shape{in.n(), out_c, g.out_h, g.out_w});
  AlignedVector<T> cols(direct ? 0 : static_cast<size_t>(in.n() * K * P));
  CMapR<T> W(wt.data(), out_c, K);
  for (int64_t b = 0; b < in.n(); ++b) {
    const T* src = in.plane(b, 0);
    const T* col_ptr = src;
    if (!direct) {
      im2col(src, g, cols.data() + b * K * P);
      col_ptr = cols.data() + b * K * P;
    }
    MapR<T> Y(out.plane(b, 0), out_c, P);
    Y.noalias() = W * CMapR<T>(col_ptr, K, P);
    if (bias.valid()) Y.colwise() += Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(bias.value().data(), out_c);
  }
  require_finite(out, "conv2d output");

  const int xid = x.id(), wid = weight.id(), bid = bias.valid() ? bias.id() : -1;
  return x.tape().record(
      std::move(out), {x, weight, bias},
      [xid, wid, bid, g, out_c, K, P, direct, cols = std::move(cols)](Tape<T>& tape, const Tensor<T>& gout) {
        const Tensor<T>& in = tape.value(xid);
        const Tensor<T>& wt = tape.value(wid);
        CMapR<T> W(wt.data(), out_c, K);
        const bool need_w = tape.requires_grad(wid);
        const bool need_b = bid >= 0 && tape.requires_grad(bid);
        const bool need_x = tape.requires_grad(xid);
        AlignedVector<T> dcols(need_x && !direct ? static_cast<size_t>(K * P) : 0);
        for (int64_t b = 0; b < gout.n(); ++b) {
          CMapR<T> G(gout.plane(b, 0), out_c, P);
          const T* col_ptr = direct ? in.plane(b, 0) : cols.data() + b * K * P;
          if (need_w) {
            MapR<T> dW(tape.grad_buffer(wid).data(), out_c, K);
            dW.noalias() += G * CMapR<T>(col_ptr, K, P).transpose();
          }
          if (need_b) {
            Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(tape.grad_buffer(bid).data(), out_c);
            db += G.rowwise().sum();
          }
          if (need_x) {
            T* dx = tape.grad_buffer(xid).plane(b, 0);
            if (direct) {
              MapR<T>(dx, K, P).noalias() += W.transpose() * G;
            } else {
              MapR<T> D(dcols.data(), K, P);
              D.noalias() = W.transpose() * G;
              col2im(dcols.data(), g, dx);
            }
          }
        }
      });
}

template <typename T>
Var<T> depthwise_filter(const Var<T>& x, const Tensor<T>& kernel, int pad, Padding padding) {
  const Tensor<T>& in = x.value();
  const int64_t kh = kernel.h(), kw = kernel.w();
  if (kernel.n() != 1 || kernel.c() != 1) throw DimensionError("depthwise_filter: kernel must be (1,1,kh,kw)");
  const int64_t oh = in.h() + 2 * pad - kh + 1;
  const int64_t ow = in.w() + 2 * pad - kw + 1;
  if (oh < 1 || ow < 1) throw DimensionError("depthwise_filter: kernel larger than input " + in.shape().str());
  Tensor<T> out(Shape{in.n(), in.c(), oh, ow});
  const int64_t planes = in.n() * in.c();
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = in.data() + p * in.h() * in.w();
    T* dst = out.data() + p * oh * ow;
    for (int64_t y = 0; y < oh; ++y) {
      for (int64_t xq = 0; xq < ow; ++xq) {
        T acc = 0;
        for (int64_t ky = 0; ky < kh; ++ky) {
          const int64_t iy = pad_index(y - pad + ky, in.h(), padding);
          if (iy < 0) continue;
          for (int64_t kx = 0; kx < kw; ++kx) {
            const int64_t ix = pad_index(xq - pad + kx, in.w(), padding);
            if (ix < 0) continue;
            acc += kernel[ky * kw + kx] * src[iy * in.w() + ix];
          }
        }
        dst[y * ow + xq] = acc;
      }
    }
  }
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, kernel, pad, padding, oh, ow](Tape<T>& tape, const Tensor<T>& gout) {
    Tensor<T>& dx = tape.grad_buffer(xid);
    const int64_t kh = kernel.h(), kw = kernel.w();
    const int64_t h = dx.h(), w = dx.w();
    const int64_t planes = dx.n() * dx.c();
    for (int64_t p = 0; p < planes; ++p) {
      const T* g = gout.data() + p * oh * ow;
      T* d = dx.data() + p * h * w;
      for (int64_t y = 0; y < oh; ++y) {
        for (int64_t xq = 0; xq < ow; ++xq) {
          const T gv = g[y * ow + xq];
          if (gv == T(0)) continue;
          for (int64_t ky = 0; ky < kh; ++ky) {
            const int64_t iy = pad_index(y - pad + ky, h, padding);
            if (iy < 0) continue;
            for (int64_t kx = 0; kx < kw; ++kx) {
              const int64_t ix = pad_index(xq - pad + kx, w, padding);
              if (ix < 0) continue;
              d[iy * w + ix] += kernel[ky * kw + kx] * gv;
            }
          }
        }
      }
    }
  });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const Tensor<T>& in = x.value();
  const Tensor<T>& wt = weight.value();
  const int64_t n = in.n();
  const int64_t d = in.c() * in.h() * in.w();
  const int64_t out_d = wt.n();
  if (wt.c() * wt.h() * wt.w() != d) {
    throw DimensionError("linear: input dim " + std::to_string(d) + " vs weight " + wt.shape().str());
  }
  if (bias.valid() && bias.value().numel() != out_d) throw DimensionError("linear: bias length mismatch");
  Tensor<T> out(Shape{n, out_d, 1, 1});
  MapR<T> Y(out.data(), n, out_d);
  Y.noalias() = CMapR<T>(in.data(), n, d) * CMapR<T>(wt.data(), out_d, d).transpose();
  if (bias.valid()) {
    Y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.value().data(), out_d);
  }
  require_finite(out, "linear output");
  const int xid = x.id(), wid = weight.id(), bid = bias.valid() ? bias.id() : -1;
  return x.tape().record(std::move(out), {x, weight, bias}, [=](Tape<T>& tape, const Tensor<T>& gout) {
    CMapR<T> G(gout.data(), n, out_d);
    if (tape.requires_grad(wid)) {
      MapR<T>(tape.grad_buffer(wid).data(), out_d, d).noalias() +=
          G.transpose() * CMapR<T>(tape.value(xid).data(), n, d);
    }
    if (bid >= 0 && tape.requires_grad(bid)) {
      Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(tape.grad_buffer(bid).data(), out_d) += G.colwise().sum();
    }
    if (tape.requires_grad(xid)) {
      MapR<T>(tape.grad_buffer(xid).data(), n, d).noalias() += G * CMapR<T>(tape.value(wid).data(), out_d, d);
    }
  });
}

#define TONEMAP_INSTANTIATE(T)                                                              \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, Conv2dOptions);       \
  template Var<T> depthwise_filter(const Var<T>&, const Tensor<T>&, int, Padding);          \
  template Var<T> linear(const Var<T>&, const Var<T>&, const Var<T>&);
TONEMAP_INSTANTIATE(float)
TONEMAP_INSTANTIATE(double)
#undef TONEMAP_INSTANTIATE

}  // namespace tonemap::ops
