#include "tonemap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tonemap/errors.hpp"

namespace tonemap::metrics {
namespace {

using Plane = std::vector<double>;

std::vector<double> gaussian_taps(int size, double sigma) {
  std::vector<double> g(static_cast<size_t>(size));
  double total = 0;
  for (int i = 0; i < size; ++i) {
    const double d = i - (size - 1) / 2.0;
    g[i] = std::exp(-d * d / (2 * sigma * sigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Separable 'valid' correlation of an h x w plane.
Plane filter_valid(const Plane& in, int h, int w, const std::vector<double>& taps) {
  const int k = static_cast<int>(taps.size());
  const int oh = h - k + 1, ow = w - k + 1;
  Plane tmp(static_cast<size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < k; ++i) s += taps[i] * in[static_cast<size_t>(y) * w + x + i];
      tmp[static_cast<size_t>(y) * ow + x] = s;
    }
  }
  Plane out(static_cast<size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < k; ++i) s += taps[i] * tmp[static_cast<size_t>(y + i) * ow + x];
      out[static_cast<size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

Plane multiply(const Plane& a, const Plane& b) {
  Plane out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

template <typename T>
Plane extract_plane(const Tensor<T>& t, int64_t n, int64_t c) {
  const T* p = t.plane(n, c);
  return Plane(p, p + t.shape().plane());
}

double ssim_plane(const Plane& a, const Plane& b, int h, int w, const std::vector<double>& taps) {
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const Plane ma = filter_valid(a, h, w, taps);
  const Plane mb = filter_valid(b, h, w, taps);
  const Plane eaa = filter_valid(multiply(a, a), h, w, taps);
  const Plane ebb = filter_valid(multiply(b, b), h, w, taps);
  const Plane eab = filter_valid(multiply(a, b), h, w, taps);
  double total = 0;
  for (size_t i = 0; i < ma.size(); ++i) {
    const double va = eaa[i] - ma[i] * ma[i];
    const double vb = ebb[i] - mb[i] * mb[i];
    const double cov = eab[i] - ma[i] * mb[i];
    total += ((2 * ma[i] * mb[i] + c1) * (2 * cov + c2)) / ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(ma.size());
}

double normal_cdf(double x, double mu, double sigma) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::numbers::sqrt2));
}

double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2 * std::numbers::pi));
}

double beta_pdf(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  return std::exp((a - 1) * std::log(x) + (b - 1) * std::log1p(-x) - log_beta);
}

// Structural fidelity at one scale; `sf` is the spatial frequency in cycles/degree.
double tmqi_local(const Plane& hdr, const Plane& ldr, int h, int w, double sf, const std::vector<double>& taps) {
  constexpr double c1 = 0.01, c2 = 10.0;
  const double csf = 100.0 * 2.6 * (0.0192 + 0.114 * sf) * std::exp(-std::pow(0.114 * sf, 1.1));
  const double u = 128.0 / (1.4 * csf);
  const double sig = u / 3.0;
  const Plane m1 = filter_valid(hdr, h, w, taps);
  const Plane m2 = filter_valid(ldr, h, w, taps);
  const Plane e11 = filter_valid(multiply(hdr, hdr), h, w, taps);
  const Plane e22 = filter_valid(multiply(ldr, ldr), h, w, taps);
  const Plane e12 = filter_valid(multiply(hdr, ldr), h, w, taps);
  double total = 0;
  for (size_t i = 0; i < m1.size(); ++i) {
    const double s1 = std::sqrt(std::max(0.0, e11[i] - m1[i] * m1[i]));
    const double s2 = std::sqrt(std::max(0.0, e22[i] - m2[i] * m2[i]));
    const double s12 = e12[i] - m1[i] * m2[i];
    const double p1 = normal_cdf(s1, u, sig);
    const double p2 = normal_cdf(s2, u, sig);
    total += ((2 * p1 * p2 + c1) / (p1 * p1 + p2 * p2 + c1)) * ((s12 + c2) / (s1 * s2 + c2));
  }
  return total / static_cast<double>(m1.size());
}

// 2x2 box filter with symmetric padding, then keep even samples.
Plane halve(const Plane& in, int h, int w, int& oh, int& ow) {
  oh = (h + 1) / 2;
  ow = (w + 1) / 2;
  Plane out(static_cast<size_t>(oh) * ow);
  auto at = [&](int y, int x) { return in[static_cast<size_t>(std::min(y, h - 1)) * w + std::min(x, w - 1)]; };
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const int sy = 2 * y, sx = 2 * x;
      out[static_cast<size_t>(y) * ow + x] =
          0.25 * (at(sy, sx) + at(sy, sx + 1) + at(sy + 1, sx) + at(sy + 1, sx + 1));
    }
  }
  return out;
}

double naturalness(const Plane& ldr, int h, int w) {
  constexpr int block = 11;
  double mean = 0;
  for (double v : ldr) mean += v;
  mean /= static_cast<double>(ldr.size());
  double sig_total = 0;
  int blocks = 0;
  for (int by = 0; by < h; by += block) {
    for (int bx = 0; bx < w; bx += block) {
      const int ey = std::min(by + block, h), ex = std::min(bx + block, w);
      const int count = (ey - by) * (ex - bx);
      double m = 0;
      for (int y = by; y < ey; ++y) {
        for (int x = bx; x < ex; ++x) m += ldr[static_cast<size_t>(y) * w + x];
      }
      m /= count;
      double ss = 0;
      for (int y = by; y < ey; ++y) {
        for (int x = bx; x < ex; ++x) {
          const double d = ldr[static_cast<size_t>(y) * w + x] - m;
          ss += d * d;
        }
      }
      sig_total += count > 1 ? std::sqrt(ss / (count - 1)) : 0.0;
      ++blocks;
    }
  }
  const double sig = sig_total / blocks;
  constexpr double a = 4.4, b = 10.1;
  const double mode = (a - 1) / (a + b - 2);
  const double pc = beta_pdf(sig / 64.29, a, b) / beta_pdf(mode, a, b);
  constexpr double mu = 115.94, sd = 27.99;
  const double pb = normal_pdf(mean, mu, sd) / normal_pdf(mu, mu, sd);
  return pb * pc;
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

double srgb_encode(double linear) {
  linear = std::clamp(linear, 0.0, 1.0);
  return linear <= 0.0031308 ? 12.92 * linear : 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

double srgb_decode(double encoded) {
  encoded = std::clamp(encoded, 0.0, 1.0);
  return encoded <= 0.04045 ? encoded / 12.92 : std::pow((encoded + 0.055) / 1.055, 2.4);
}

void rgb_to_lab(double r, double g, double b, double lab[3]) {
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = lab_f(x / 0.95047), fy = lab_f(y / 1.0), fz = lab_f(z / 1.08883);
  lab[0] = 116 * fy - 16;
  lab[1] = 500 * (fx - fy);
  lab[2] = 200 * (fy - fz);
}

template <typename T>
double mse(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mse");
  if (a.numel() == 0) throw DimensionError("mse: empty tensors");
  double total = 0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    total += d * d;
  }
  return total / static_cast<double>(a.numel());
}

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak) {
  const double m = mse(a, b);
  if (m == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / m));
}

template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "ssim");
  const int h = static_cast<int>(a.h()), w = static_cast<int>(a.w());
  int window = std::min({11, h, w});
  if (window % 2 == 0) --window;
  if (window < 1) throw DimensionError("ssim: empty image");
  const auto taps = gaussian_taps(window, 1.5);
  double total = 0;
  for (int64_t n = 0; n < a.n(); ++n) {
    for (int64_t c = 0; c < a.c(); ++c) total += ssim_plane(extract_plane(a, n, c), extract_plane(b, n, c), h, w, taps);
  }
  return total / static_cast<double>(a.n() * a.c());
}

template <typename T>
double delta_e(const Tensor<T>& a, const Tensor<T>& b, LdrEncoding encoding) {
  require_same_shape(a.shape(), b.shape(), "delta_e");
  if (a.c() != 3) throw DimensionError("delta_e: expected 3 channels");
  auto to_linear = [&](double v) { return encoding == LdrEncoding::kDisplay ? srgb_decode(v) : std::clamp(v, 0.0, 1.0); };
  const int64_t plane = a.shape().plane();
  double total = 0;
  for (int64_t n = 0; n < a.n(); ++n) {
    for (int64_t i = 0; i < plane; ++i) {
      double la[3], lb[3];
      rgb_to_lab(to_linear(a.plane(n, 0)[i]), to_linear(a.plane(n, 1)[i]), to_linear(a.plane(n, 2)[i]), la);
      rgb_to_lab(to_linear(b.plane(n, 0)[i]), to_linear(b.plane(n, 1)[i]), to_linear(b.plane(n, 2)[i]), lb);
      total += std::sqrt((la[0] - lb[0]) * (la[0] - lb[0]) + (la[1] - lb[1]) * (la[1] - lb[1]) +
                         (la[2] - lb[2]) * (la[2] - lb[2]));
    }
  }
  return total / static_cast<double>(a.n() * plane);
}

template <typename T>
TmqiResult tmqi(const Tensor<T>& ldr, const Tensor<T>& hdr, LdrEncoding encoding) {
  if (ldr.h() != hdr.h() || ldr.w() != hdr.w() || ldr.c() != 3 || hdr.c() != 3) {
    throw DimensionError("tmqi: expected 3-channel images of equal size, got " + ldr.shape().str() + " and " +
                         hdr.shape().str());
  }
  int h = static_cast<int>(hdr.h()), w = static_cast<int>(hdr.w());
  const int64_t plane = hdr.shape().plane();
  constexpr double kr = 0.2126, kg = 0.7152, kb = 0.0722;
  constexpr double kLumaFloor = 1e-12;

  Plane lh(plane), ll(plane);
  double lo = 0, hi = 0;
  for (int64_t i = 0; i < plane; ++i) {
    const double y = std::max(kLumaFloor, kr * hdr.plane(0, 0)[i] + kg * hdr.plane(0, 1)[i] + kb * hdr.plane(0, 2)[i]);
    lh[i] = y;
    lo = i == 0 ? y : std::min(lo, y);
    hi = i == 0 ? y : std::max(hi, y);
  }
  const double range = hi - lo;
  constexpr double kHdrScale = 4294967295.0;
  for (double& v : lh) v = range > 0 ? std::round(kHdrScale / range * (v - lo)) : 0.0;

  auto display = [&](double v) { return encoding == LdrEncoding::kLinear ? srgb_encode(v) : std::clamp(v, 0.0, 1.0); };
  for (int64_t i = 0; i < plane; ++i) {
    ll[i] = 255.0 * (kr * display(ldr.plane(0, 0)[i]) + kg * display(ldr.plane(0, 1)[i]) +
                     kb * display(ldr.plane(0, 2)[i]));
  }

  const Plane ll_full = ll;
  const auto taps = gaussian_taps(11, 1.5);
  constexpr double kWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  TmqiResult out;
  while (out.levels < 5 && (std::min(h, w) >> out.levels) >= 11) ++out.levels;
  double log_s = 0, weight_total = 0;
  double sf = 32;
  int ch = h, cw = w;
  for (int l = 0; l < out.levels; ++l) {
    sf /= 2;
    const double s = std::clamp(tmqi_local(lh, ll, ch, cw, sf, taps), 0.0, 1.0);
    log_s += kWeights[l] * std::log(std::max(s, 1e-300));
    weight_total += kWeights[l];
    if (l + 1 < out.levels) {
      int nh = 0, nw = 0;
      lh = halve(lh, ch, cw, nh, nw);
      ll = halve(ll, ch, cw, nh, nw);
      ch = nh;
      cw = nw;
    }
  }
  out.s = out.levels > 0 ? std::exp(log_s / weight_total) : 0.0;
  out.n = naturalness(ll_full, h, w);
  constexpr double a = 0.8012, alpha = 0.3046, beta = 0.7088;
  out.q = a * std::pow(out.s, alpha) + (1 - a) * std::pow(out.n, beta);
  return out;
}

MetricRecord MetricReport::mean() const {
  MetricRecord m;
  m.name = "mean";
  if (records.empty()) return m;
  for (const auto& r : records) {
    m.psnr += r.psnr;
    m.ssim += r.ssim;
    m.tmqi += r.tmqi;
    m.delta_e += r.delta_e;
  }
  const double n = static_cast<double>(records.size());
  m.psnr /= n;
  m.ssim /= n;
  m.tmqi /= n;
  m.delta_e /= n;
  return m;
}

#define TONEMAP_INSTANTIATE(T)                                                   \
  template double mse(const Tensor<T>&, const Tensor<T>&);                       \
  template double psnr(const Tensor<T>&, const Tensor<T>&, double);              \
  template double ssim(const Tensor<T>&, const Tensor<T>&);                      \
  template double delta_e(const Tensor<T>&, const Tensor<T>&, LdrEncoding);      \
  template TmqiResult tmqi(const Tensor<T>&, const Tensor<T>&, LdrEncoding);
TONEMAP_INSTANTIATE(float)
TONEMAP_INSTANTIATE(double)
#undef TONEMAP_INSTANTIATE

}  // namespace tonemap::metrics
