#include <cmath>

#include "tonemap/errors.hpp"
#include "tonemap/ops.hpp"

namespace tonemap::ops {
namespace {

// Elementwise unary op with derivative expressed through the input value.
template <typename T, typename F, typename DF>
Var<T> unary(const Var<T>& x, F f, DF df) {
  const Tensor<T>& in = x.value();
  Tensor<T> out(in.shape());
  for (int64_t i = 0; i < in.numel(); ++i) out[i] = f(in[i]);
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, df](Tape<T>& tape, const Tensor<T>& g) {
    const Tensor<T>& in = tape.value(xid);
    Tensor<T>& dx = tape.grad_buffer(xid);
    for (int64_t i = 0; i < in.numel(); ++i) dx[i] += g[i] * df(in[i]);
  });
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<T> out = a.value();
  out.axpy(T(1), b.value());
  const int aid = a.id(), bid = b.id();
  return a.tape().record(std::move(out), {a, b}, [aid, bid](Tape<T>& tape, const Tensor<T>& g) {
    tape.accumulate(aid, g);
    tape.accumulate(bid, g);
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor<T> out = a.value();
  out.axpy(T(-1), b.value());
  const int aid = a.id(), bid = b.id();
  return a.tape().record(std::move(out), {a, b}, [aid, bid](Tape<T>& tape, const Tensor<T>& g) {
    tape.accumulate(aid, g);
    if (tape.requires_grad(bid)) tape.grad_buffer(bid).axpy(T(-1), g);
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  const Tensor<T>& va = a.value();
  const Tensor<T>& vb = b.value();
  Tensor<T> out(va.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = va[i] * vb[i];
  const int aid = a.id(), bid = b.id();
  return a.tape().record(std::move(out), {a, b}, [aid, bid](Tape<T>& tape, const Tensor<T>& g) {
    const Tensor<T>& va = tape.value(aid);
    const Tensor<T>& vb = tape.value(bid);
    if (tape.requires_grad(aid)) {
      Tensor<T>& da = tape.grad_buffer(aid);
      for (int64_t i = 0; i < g.numel(); ++i) da[i] += g[i] * vb[i];
    }
    if (tape.requires_grad(bid)) {
      Tensor<T>& db = tape.grad_buffer(bid);
      for (int64_t i = 0; i < g.numel(); ++i) db[i] += g[i] * va[i];
    }
  });
}

template <typename T>
Var<T> div(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.shape(), b.shape(), "div");
  const Tensor<T>& va = a.value();
  const Tensor<T>& vb = b.value();
  Tensor<T> out(va.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = va[i] / vb[i];
  require_finite(out, "div");
  const int aid = a.id(), bid = b.id();
  return a.tape().record(std::move(out), {a, b}, [aid, bid](Tape<T>& tape, const Tensor<T>& g) {
    const Tensor<T>& va = tape.value(aid);
    const Tensor<T>& vb = tape.value(bid);
    if (tape.requires_grad(aid)) {
      Tensor<T>& da = tape.grad_buffer(aid);
      for (int64_t i = 0; i < g.numel(); ++i) da[i] += g[i] / vb[i];
    }
    if (tape.requires_grad(bid)) {
      Tensor<T>& db = tape.grad_buffer(bid);
      for (int64_t i = 0; i < g.numel(); ++i) db[i] -= g[i] * va[i] / (vb[i] * vb[i]);
    }
  });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T s) {
  return unary<T>(a, [s](T v) { return v + s; }, [](T) { return T(1); });
}

template <typename T>
Var<T> mul_scalar(const Var<T>& a, T s) {
  return unary<T>(a, [s](T v) { return v * s; }, [s](T) { return s; });
}

template <typename T>
Var<T> pow_scalar(const Var<T>& x, T p, T floor) {
  return unary<T>(
      x, [p, floor](T v) { return std::pow(std::max(v, floor), p); },
      [p, floor](T v) { return v < floor ? T(0) : p * std::pow(v, p - T(1)); });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  return unary<T>(x, [](T v) { return v > T(0) ? v : T(0); }, [](T v) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  return unary<T>(
      x, [slope](T v) { return v > T(0) ? v : slope * v; }, [slope](T v) { return v > T(0) ? T(1) : slope; });
}

template <typename T>
Var<T> abs(const Var<T>& x) {
  return unary<T>(
      x, [](T v) { return std::abs(v); },
      [](T v) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); });
}

template <typename T>
Var<T> square(const Var<T>& x) {
  return unary<T>(x, [](T v) { return v * v; }, [](T v) { return T(2) * v; });
}

template <typename T>
Var<T> clamp(const Var<T>& x, T lo, T hi) {
  return unary<T>(
      x, [lo, hi](T v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](T v) { return (v >= lo && v <= hi) ? T(1) : T(0); });
}

template <typename T>
Var<T> scale_shift(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta) {
  const Tensor<T>& in = x.value();
  const Shape per_channel{in.n(), in.c(), 1, 1};
  require_same_shape(gamma.shape(), per_channel, "scale_shift gamma");
  require_same_shape(beta.shape(), per_channel, "scale_shift beta");
  Tensor<T> out(in.shape());
  const int64_t hw = in.shape().plane();
  for (int64_t p = 0; p < in.n() * in.c(); ++p) {
    const T gm = gamma.value()[p], bt = beta.value()[p];
    const T* src = in.data() + p * hw;
    T* dst = out.data() + p * hw;
    for (int64_t i = 0; i < hw; ++i) dst[i] = src[i] * gm + bt;
  }
  const int xid = x.id(), gid = gamma.id(), bid = beta.id();
  return x.tape().record(std::move(out), {x, gamma, beta}, [xid, gid, bid, hw](Tape<T>& tape, const Tensor<T>& g) {
    const Tensor<T>& in = tape.value(xid);
    const Tensor<T>& gm = tape.value(gid);
    const bool nx = tape.requires_grad(xid), ng = tape.requires_grad(gid), nb = tape.requires_grad(bid);
    for (int64_t p = 0; p < gm.numel(); ++p) {
      const T* gp = g.data() + p * hw;
      const T* src = in.data() + p * hw;
      T sum_g = 0, sum_gx = 0;
      for (int64_t i = 0; i < hw; ++i) {
        sum_g += gp[i];
        sum_gx += gp[i] * src[i];
      }
      if (ng) tape.grad_buffer(gid)[p] += sum_gx;
      if (nb) tape.grad_buffer(bid)[p] += sum_g;
      if (nx) {
        T* dx = tape.grad_buffer(xid).data() + p * hw;
        for (int64_t i = 0; i < hw; ++i) dx[i] += gp[i] * gm[p];
      }
    }
  });
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no inputs");
  const Shape first = parts.front().shape();
  int64_t total_c = 0;
  for (const auto& p : parts) {
    const Shape s = p.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw DimensionError("concat_channels: " + s.str() + " vs " + first.str());
    }
    total_c += s.c;
  }
  Tensor<T> out(Shape{first.n, total_c, first.h, first.w});
  const int64_t hw = first.plane();
  std::vector<int> ids;
  std::vector<int64_t> chans;
  int64_t offset = 0;
  for (const auto& p : parts) {
    const Tensor<T>& v = p.value();
    for (int64_t b = 0; b < first.n; ++b) {
      std::copy(v.plane(b, 0), v.plane(b, 0) + v.c() * hw, out.plane(b, offset));
    }
    offset += v.c();
    ids.push_back(p.id());
    chans.push_back(v.c());
  }
  return parts.front().tape().record(std::move(out), parts, [ids, chans, hw, total_c](Tape<T>& tape, const Tensor<T>& g) {
    int64_t offset = 0;
    for (size_t k = 0; k < ids.size(); ++k) {
      if (tape.requires_grad(ids[k])) {
        Tensor<T>& d = tape.grad_buffer(ids[k]);
        for (int64_t b = 0; b < g.n(); ++b) {
          const T* src = g.data() + (b * total_c + offset) * hw;
          T* dst = d.plane(b, 0);
          for (int64_t i = 0; i < chans[k] * hw; ++i) dst[i] += src[i];
        }
      }
      offset += chans[k];
    }
  });
}

template <typename T>
Var<T> slice_channels(const Var<T>& x, int begin, int count) {
  const Tensor<T>& in = x.value();
  if (begin < 0 || count < 1 || begin + count > in.c()) throw DimensionError("slice_channels: range out of bounds");
  const int64_t hw = in.shape().plane();
  Tensor<T> out(Shape{in.n(), count, in.h(), in.w()});
  for (int64_t b = 0; b < in.n(); ++b) {
    std::copy(in.plane(b, begin), in.plane(b, begin) + count * hw, out.plane(b, 0));
  }
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, begin, count, hw](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& d = tape.grad_buffer(xid);
    for (int64_t b = 0; b < g.n(); ++b) {
      const T* src = g.plane(b, 0);
      T* dst = d.plane(b, begin);
      for (int64_t i = 0; i < count * hw; ++i) dst[i] += src[i];
    }
  });
}

template <typename T>
Var<T> crop(const Var<T>& x, int top, int left, int h, int w) {
  const Tensor<T>& in = x.value();
  if (top < 0 || left < 0 || h < 1 || w < 1 || top + h > in.h() || left + w > in.w()) {
    throw DimensionError("crop: window out of bounds for " + in.shape().str());
  }
  Tensor<T> out(Shape{in.n(), in.c(), h, w});
  for (int64_t p = 0; p < in.n() * in.c(); ++p) {
    for (int y = 0; y < h; ++y) {
      const T* src = in.data() + (p * in.h() + top + y) * in.w() + left;
      std::copy(src, src + w, out.data() + (p * h + y) * w);
    }
  }
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, top, left, h, w](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& d = tape.grad_buffer(xid);
    for (int64_t p = 0; p < d.n() * d.c(); ++p) {
      for (int y = 0; y < h; ++y) {
        T* dst = d.data() + (p * d.h() + top + y) * d.w() + left;
        const T* src = g.data() + (p * h + y) * w;
        for (int xq = 0; xq < w; ++xq) dst[xq] += src[xq];
      }
    }
  });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> out = x.value().reshaped(shape);
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& d = tape.grad_buffer(xid);
    for (int64_t i = 0; i < g.numel(); ++i) d[i] += g[i];
  });
}

template <typename T>
Var<T> spatial_to_batch(const Var<T>& x) {
  const Tensor<T>& in = x.value();
  const int64_t n = in.n(), c = in.c(), hw = in.shape().plane();
  Tensor<T> out(Shape{n * hw, c, 1, 1});
  for (int64_t b = 0; b < n; ++b) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const T* src = in.plane(b, ch);
      for (int64_t i = 0; i < hw; ++i) out[(b * hw + i) * c + ch] = src[i];
    }
  }
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, n, c, hw](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& d = tape.grad_buffer(xid);
    for (int64_t b = 0; b < n; ++b) {
      for (int64_t ch = 0; ch < c; ++ch) {
        T* dst = d.plane(b, ch);
        for (int64_t i = 0; i < hw; ++i) dst[i] += g[(b * hw + i) * c + ch];
      }
    }
  });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  const Tensor<T>& in = x.value();
  double acc = 0;
  for (T v : in.values()) acc += v;
  const int xid = x.id();
  return x.tape().record(Tensor<T>::scalar(static_cast<T>(acc)), {x}, [xid](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& d = tape.grad_buffer(xid);
    const T gv = g[0];
    for (int64_t i = 0; i < d.numel(); ++i) d[i] += gv;
  });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  const Tensor<T>& in = x.value();
  if (in.numel() == 0) throw DimensionError("mean of empty tensor");
  double acc = 0;
  for (T v : in.values()) acc += v;
  const T inv = T(1) / static_cast<T>(in.numel());
  const int xid = x.id();
  return x.tape().record(Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(in.numel()))), {x},
                         [xid, inv](Tape<T>& tape, const Tensor<T>& g) {
                           Tensor<T>& d = tape.grad_buffer(xid);
                           const T gv = g[0] * inv;
                           for (int64_t i = 0; i < d.numel(); ++i) d[i] += gv;
                         });
}

template <typename T>
Var<T> channel_mean(const Var<T>& x) {
  const Tensor<T>& in = x.value();
  const int64_t n = in.n(), c = in.c(), hw = in.shape().plane();
  Tensor<T> out(Shape{1, c, 1, 1});
  for (int64_t ch = 0; ch < c; ++ch) {
    double acc = 0;
    for (int64_t b = 0; b < n; ++b) {
      const T* src = in.plane(b, ch);
      for (int64_t i = 0; i < hw; ++i) acc += src[i];
    }
    out[ch] = static_cast<T>(acc / static_cast<double>(n * hw));
  }
  const int xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, n, c, hw](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& d = tape.grad_buffer(xid);
    const T inv = T(1) / static_cast<T>(n * hw);
    for (int64_t b = 0; b < n; ++b) {
      for (int64_t ch = 0; ch < c; ++ch) {
        T* dst = d.plane(b, ch);
        const T gv = g[ch] * inv;
        for (int64_t i = 0; i < hw; ++i) dst[i] += gv;
      }
    }
  });
}

#define TONEMAP_INSTANTIATE(T)                                                     \
  template Var<T> add(const Var<T>&, const Var<T>&);                               \
  template Var<T> sub(const Var<T>&, const Var<T>&);                               \
  template Var<T> mul(const Var<T>&, const Var<T>&);                               \
  template Var<T> div(const Var<T>&, const Var<T>&);                               \
  template Var<T> add_scalar(const Var<T>&, T);                                    \
  template Var<T> mul_scalar(const Var<T>&, T);                                    \
  template Var<T> pow_scalar(const Var<T>&, T, T);                                 \
  template Var<T> relu(const Var<T>&);                                             \
  template Var<T> leaky_relu(const Var<T>&, T);                                    \
  template Var<T> abs(const Var<T>&);                                              \
  template Var<T> square(const Var<T>&);                                           \
  template Var<T> clamp(const Var<T>&, T, T);                                      \
  template Var<T> scale_shift(const Var<T>&, const Var<T>&, const Var<T>&);        \
  template Var<T> concat_channels(const std::vector<Var<T>>&);                     \
  template Var<T> slice_channels(const Var<T>&, int, int);                         \
  template Var<T> crop(const Var<T>&, int, int, int, int);                         \
  template Var<T> reshape(const Var<T>&, Shape);                                   \
  template Var<T> spatial_to_batch(const Var<T>&);                                 \
  template Var<T> sum(const Var<T>&);                                              \
  template Var<T> mean(const Var<T>&);                                             \
  template Var<T> channel_mean(const Var<T>&);
TONEMAP_INSTANTIATE(float)
TONEMAP_INSTANTIATE(double)
#undef TONEMAP_INSTANTIATE

}  // namespace tonemap::ops
