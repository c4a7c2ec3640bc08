#include <cmath>

#include "tonemap/errors.hpp"
#include "tonemap/ops.hpp"

namespace tonemap::ops {
namespace {

struct Tap {
  int64_t index;
  double weight;
};
using TapTable = std::vector<std::vector<Tap>>;

TapTable upsample2x_taps(int64_t in) {
  TapTable table(static_cast<size_t>(in * 2));
  for (int64_t o = 0; o < in * 2; ++o) {
    double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
    if (src < 0) src = 0;
    const int64_t i0 = static_cast<int64_t>(std::floor(src));
    const int64_t i1 = std::min(i0 + 1, in - 1);
    const double l = src - static_cast<double>(i0);
    table[o] = {{i0, 1.0 - l}, {i1, l}};
  }
  return table;
}

// Triangle (tent) filter whose half-width equals the reduction factor.
TapTable downsample_taps(int64_t in, int factor) {
  const int64_t out = in / factor;
  TapTable table(static_cast<size_t>(out));
  for (int64_t o = 0; o < out; ++o) {
    const double center = (static_cast<double>(o) + 0.5) * factor - 0.5;
    const int64_t lo = std::max<int64_t>(0, static_cast<int64_t>(std::ceil(center - factor)));
    const int64_t hi = std::min<int64_t>(in - 1, static_cast<int64_t>(std::floor(center + factor)));
    double total = 0;
    for (int64_t i = lo; i <= hi; ++i) {
      const double w = 1.0 - std::abs(static_cast<double>(i) - center) / factor;
      if (w > 0) {
        table[o].push_back({i, w});
        total += w;
      }
    }
    for (auto& t : table[o]) t.weight /= total;
  }
  return table;
}

template <typename T>
Tensor<T> resample_forward(const Tensor<T>& in, const TapTable& ty, const TapTable& tx) {
  const int64_t oh = static_cast<int64_t>(ty.size()), ow = static_cast<int64_t>(tx.size());
  const int64_t planes = in.n() * in.c();
  Tensor<T> out(Shape{in.n(), in.c(), oh, ow});
  AlignedVector<T> tmp(static_cast<size_t>(in.h() * ow));
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = in.data() + p * in.h() * in.w();
    for (int64_t y = 0; y < in.h(); ++y) {
      for (int64_t x = 0; x < ow; ++x) {
        double acc = 0;
        for (const Tap& t : tx[x]) acc += t.weight * src[y * in.w() + t.index];
        tmp[y * ow + x] = static_cast<T>(acc);
      }
    }
    T* dst = out.data() + p * oh * ow;
    for (int64_t y = 0; y < oh; ++y) {
      for (int64_t x = 0; x < ow; ++x) {
        double acc = 0;
        for (const Tap& t : ty[y]) acc += t.weight * tmp[t.index * ow + x];
        dst[y * ow + x] = static_cast<T>(acc);
      }
    }
  }
  return out;
}

template <typename T>
void resample_backward(const Tensor<T>& g, const TapTable& ty, const TapTable& tx, Tensor<T>& dx) {
  const int64_t oh = g.h(), ow = g.w();
  const int64_t planes = g.n() * g.c();
  AlignedVector<double> tmp(static_cast<size_t>(dx.h() * ow));
  for (int64_t p = 0; p < planes; ++p) {
    std::fill(tmp.begin(), tmp.end(), 0.0);
    const T* gp = g.data() + p * oh * ow;
    for (int64_t y = 0; y < oh; ++y) {
      for (const Tap& t : ty[y]) {
        for (int64_t x = 0; x < ow; ++x) tmp[t.index * ow + x] += t.weight * gp[y * ow + x];
      }
    }
    T* d = dx.data() + p * dx.h() * dx.w();
    for (int64_t y = 0; y < dx.h(); ++y) {
      for (int64_t x = 0; x < ow; ++x) {
        const double v = tmp[y * ow + x];
        for (const Tap& t : tx[x]) d[y * dx.w() + t.index] += static_cast<T>(t.weight * v);
      }
    }
  }
}

template <typename T>
Var<T> resample(const Var<T>& x, TapTable ty, TapTable tx) {
  Tensor<T> out = resample_forward(x.value(), ty, tx);
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, ty = std::move(ty), tx = std::move(tx)](Tape<T>& tape, const Tensor<T>& g) {
    resample_backward(g, ty, tx, tape.grad_buffer(xid));
  });
}

}  // namespace

template <typename T>
Var<T> upsample_bilinear2x(const Var<T>& x) {
  const Shape s = x.shape();
  if (s.h < 1 || s.w < 1) throw DimensionError("upsample_bilinear2x: empty input");
  return resample(x, upsample2x_taps(s.h), upsample2x_taps(s.w));
}

template <typename T>
Var<T> downsample_bilinear(const Var<T>& x, int factor) {
  const Shape s = x.shape();
  if (factor < 1) throw DimensionError("downsample_bilinear: factor must be >= 1");
  if (s.h % factor != 0 || s.w % factor != 0) {
    throw DimensionError("downsample_bilinear: " + s.str() + " not divisible by " + std::to_string(factor));
  }
  return resample(x, downsample_taps(s.h, factor), downsample_taps(s.w, factor));
}

template <typename T>
Var<T> maxpool2(const Var<T>& x) {
  const Tensor<T>& in = x.value();
  if (in.h() % 2 != 0 || in.w() % 2 != 0) throw DimensionError("maxpool2: odd spatial size " + in.shape().str());
  const int64_t oh = in.h() / 2, ow = in.w() / 2, planes = in.n() * in.c();
  Tensor<T> out(Shape{in.n(), in.c(), oh, ow});
  std::vector<int64_t> argmax(static_cast<size_t>(out.numel()));
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = in.data() + p * in.h() * in.w();
    for (int64_t y = 0; y < oh; ++y) {
      for (int64_t xq = 0; xq < ow; ++xq) {
        int64_t best = (2 * y) * in.w() + 2 * xq;
        for (int64_t dy = 0; dy < 2; ++dy) {
          for (int64_t dx = 0; dx < 2; ++dx) {
            const int64_t idx = (2 * y + dy) * in.w() + 2 * xq + dx;
            if (src[idx] > src[best]) best = idx;
          }
        }
        const int64_t o = (p * oh + y) * ow + xq;
        out[o] = src[best];
        argmax[o] = p * in.h() * in.w() + best;
      }
    }
  }
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, argmax = std::move(argmax)](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& d = tape.grad_buffer(xid);
    for (size_t o = 0; o < argmax.size(); ++o) d[argmax[o]] += g[static_cast<int64_t>(o)];
  });
}

template <typename T>
Var<T> avgpool2(const Var<T>& x) {
  const Tensor<T>& in = x.value();
  if (in.h() % 2 != 0 || in.w() % 2 != 0) throw DimensionError("avgpool2: odd spatial size " + in.shape().str());
  TapTable ty(static_cast<size_t>(in.h() / 2)), tx(static_cast<size_t>(in.w() / 2));
  for (size_t i = 0; i < ty.size(); ++i) ty[i] = {{int64_t(2 * i), 0.5}, {int64_t(2 * i + 1), 0.5}};
  for (size_t i = 0; i < tx.size(); ++i) tx[i] = {{int64_t(2 * i), 0.5}, {int64_t(2 * i + 1), 0.5}};
  return resample(x, std::move(ty), std::move(tx));
}

template <typename T>
Var<T> adaptive_avg_pool(const Var<T>& x, int out_h, int out_w) {
  const Shape s = x.shape();
  if (out_h < 1 || out_w < 1) throw DimensionError("adaptive_avg_pool: output size must be positive");
  auto bins = [](int64_t in, int out) {
    TapTable t(static_cast<size_t>(out));
    for (int64_t o = 0; o < out; ++o) {
      const int64_t lo = (o * in) / out;
      const int64_t hi = ((o + 1) * in + out - 1) / out;
      for (int64_t i = lo; i < hi; ++i) t[o].push_back({i, 1.0 / static_cast<double>(hi - lo)});
    }
    return t;
  };
  return resample(x, bins(s.h, out_h), bins(s.w, out_w));
}

template <typename T>
Var<T> global_avg_pool(const Var<T>& x) {
  return adaptive_avg_pool(x, 1, 1);
}

template <typename T>
Var<T> instance_norm(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, T eps) {
  const Tensor<T>& in = x.value();
  const int64_t c = in.c(), hw = in.shape().plane(), planes = in.n() * c;
  if (weight.value().numel() != c || bias.value().numel() != c) {
    throw DimensionError("instance_norm: affine params must have " + std::to_string(c) + " entries");
  }
  if (!(eps > T(0))) throw NumericError("instance_norm: epsilon must be positive");
  Tensor<T> xhat(in.shape());
  AlignedVector<T> inv_std(static_cast<size_t>(planes));
  Tensor<T> out(in.shape());
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = in.data() + p * hw;
    double m = 0;
    for (int64_t i = 0; i < hw; ++i) m += src[i];
    m /= static_cast<double>(hw);
    double v = 0;
    for (int64_t i = 0; i < hw; ++i) v += (src[i] - m) * (src[i] - m);
    v /= static_cast<double>(hw);
    const double denom = v + static_cast<double>(eps);
    if (!(denom > 0.0)) throw NumericError("instance_norm: variance guard failed");
    const T is = static_cast<T>(1.0 / std::sqrt(denom));
    inv_std[p] = is;
    const T gm = weight.value()[p % c], bt = bias.value()[p % c];
    T* xh = xhat.data() + p * hw;
    T* dst = out.data() + p * hw;
    for (int64_t i = 0; i < hw; ++i) {
      xh[i] = static_cast<T>(src[i] - m) * is;
      dst[i] = xh[i] * gm + bt;
    }
  }
  const int xid = x.id(), wid = weight.id(), bid = bias.id();
  return x.tape().record(
      std::move(out), {x, weight, bias},
      [xid, wid, bid, c, hw, planes, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<T>& tape, const Tensor<T>& g) {
        const Tensor<T>& wt = tape.value(wid);
        const bool nx = tape.requires_grad(xid), nw = tape.requires_grad(wid), nb = tape.requires_grad(bid);
        for (int64_t p = 0; p < planes; ++p) {
          const T* gp = g.data() + p * hw;
          const T* xh = xhat.data() + p * hw;
          double sum_g = 0, sum_gx = 0;
          for (int64_t i = 0; i < hw; ++i) {
            sum_g += gp[i];
            sum_gx += gp[i] * xh[i];
          }
          if (nw) tape.grad_buffer(wid)[p % c] += static_cast<T>(sum_gx);
          if (nb) tape.grad_buffer(bid)[p % c] += static_cast<T>(sum_g);
          if (nx) {
            const T gm = wt[p % c];
            const double scale = gm * inv_std[p] / static_cast<double>(hw);
            T* dx = tape.grad_buffer(xid).data() + p * hw;
            for (int64_t i = 0; i < hw; ++i) {
              dx[i] += static_cast<T>(scale * (hw * gp[i] - sum_g - xh[i] * sum_gx));
            }
          }
        }
      });
}

#define TONEMAP_INSTANTIATE(T)                                                           \
  template Var<T> upsample_bilinear2x(const Var<T>&);                                    \
  template Var<T> downsample_bilinear(const Var<T>&, int);                               \
  template Var<T> maxpool2(const Var<T>&);                                               \
  template Var<T> avgpool2(const Var<T>&);                                               \
  template Var<T> adaptive_avg_pool(const Var<T>&, int, int);                            \
  template Var<T> global_avg_pool(const Var<T>&);                                        \
  template Var<T> instance_norm(const Var<T>&, const Var<T>&, const Var<T>&, T);
TONEMAP_INSTANTIATE(float)
TONEMAP_INSTANTIATE(double)
#undef TONEMAP_INSTANTIATE

}  // namespace tonemap::ops
