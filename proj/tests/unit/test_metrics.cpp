#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "tonemap/errors.hpp"
#include "tonemap/metrics.hpp"

using namespace tonemap;
using namespace tonemap::metrics;
using tonemap::testing::random_tensor;

namespace {

double oracle_psnr(const Tensord& a, const Tensord& b) {
  double s = 0;
  for (int64_t i = 0; i < a.numel(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return 10 * std::log10(1.0 / (s / a.numel()));
}

// Direct 2-D windowed SSIM with a k x k Gaussian, valid placements only.
double oracle_ssim(const Tensord& a, const Tensord& b, int k) {
  std::vector<double> g(k * k);
  double total = 0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double di = i - (k - 1) / 2.0, dj = j - (k - 1) / 2.0;
      total += g[i * k + j] = std::exp(-(di * di + dj * dj) / (2 * 1.5 * 1.5));
    }
  for (double& v : g) v /= total;
  const double c1 = 1e-4, c2 = 9e-4;
  double acc = 0;
  int count = 0;
  for (int64_t c = 0; c < a.c(); ++c)
    for (int64_t y = 0; y + k <= a.h(); ++y)
      for (int64_t x = 0; x + k <= a.w(); ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const double wgt = g[i * k + j], va = a.at(0, c, y + i, x + j), vb = b.at(0, c, y + i, x + j);
            ma += wgt * va;
            mb += wgt * vb;
            saa += wgt * va * va;
            sbb += wgt * vb * vb;
            sab += wgt * va * vb;
          }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        acc += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return acc / count;
}

void oracle_lab(double r, double g, double b, double out[3]) {
  const double m[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                          {0.2126729, 0.7151522, 0.0721750},
                          {0.0193339, 0.1191920, 0.9503041}};
  const double white[3] = {0.95047, 1.0, 1.08883};
  double f[3];
  for (int i = 0; i < 3; ++i) {
    const double t = (m[i][0] * r + m[i][1] * g + m[i][2] * b) / white[i];
    f[i] = t > 216.0 / 24389.0 ? std::cbrt(t) : (24389.0 / 27.0 * t + 16) / 116;
  }
  out[0] = 116 * f[1] - 16;
  out[1] = 500 * (f[0] - f[1]);
  out[2] = 200 * (f[1] - f[2]);
}

double oracle_delta_e(const Tensord& a, const Tensord& b) {
  double total = 0;
  for (int64_t y = 0; y < a.h(); ++y)
    for (int64_t x = 0; x < a.w(); ++x) {
      double la[3], lb[3];
      oracle_lab(a.at(0, 0, y, x), a.at(0, 1, y, x), a.at(0, 2, y, x), la);
      oracle_lab(b.at(0, 0, y, x), b.at(0, 1, y, x), b.at(0, 2, y, x), lb);
      total += std::hypot(la[0] - lb[0], la[1] - lb[1], la[2] - lb[2]);
    }
  return total / (a.h() * a.w());
}

Tensord gray(int64_t h, int64_t w, const std::function<double(int64_t, int64_t)>& f) {
  Tensord t(Shape{1, 3, h, w});
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) t.at(0, c, y, x) = f(y, x);
  return t;
}

}  // namespace

TEST(Psnr, CapUniformErrorAndOracle) {
  Rng rng(1);
  const Tensord a = random_tensor<double>(Shape{1, 3, 8, 8}, rng, 0, 1);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
  Tensord b = a;
  for (auto& v : b.values()) v += 0.1;
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
  for (int t = 0; t < 20; ++t) {
    const Tensord x = random_tensor<double>(Shape{1, 3, 8, 8}, rng, 0, 1);
    const Tensord y = random_tensor<double>(Shape{1, 3, 8, 8}, rng, 0, 1);
    EXPECT_NEAR(psnr(x, y), oracle_psnr(x, y), 1e-9);
  }
  EXPECT_THROW(psnr(a, Tensord(Shape{1, 3, 8, 7})), DimensionError);
}

TEST(Ssim, IdentityAndOracle) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Tensord x = random_tensor<double>(Shape{1, 3, 8, 8}, rng, 0, 1);
    Tensord y = x;
    for (auto& v : y.values()) v = std::clamp(v + rng.uniform(-0.2, 0.2), 0.0, 1.0);
    EXPECT_NEAR(ssim(x, x), 1.0, 1e-12);
    const double s = ssim(x, y);
    EXPECT_NEAR(s, oracle_ssim(x, y, 7), 1e-6);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
  }
  const Tensord big = random_tensor<double>(Shape{1, 3, 20, 16}, rng, 0, 1);
  const Tensord big2 = random_tensor<double>(Shape{1, 3, 20, 16}, rng, 0, 1);
  EXPECT_NEAR(ssim(big, big2), oracle_ssim(big, big2, 11), 1e-6);
}

TEST(DeltaE, IdentityBlackWhiteAndOracle) {
  Rng rng(3);
  const Tensord x = random_tensor<double>(Shape{1, 3, 8, 8}, rng, 0, 1);
  EXPECT_EQ(delta_e(x, x), 0.0);
  const Tensord black(Shape{1, 3, 2, 2}, 0.0), white(Shape{1, 3, 2, 2}, 1.0);
  EXPECT_NEAR(delta_e(black, white), 100.0, 0.1);
  EXPECT_NEAR(delta_e(black, white, LdrEncoding::kDisplay), 100.0, 0.1);
  for (int t = 0; t < 20; ++t) {
    const Tensord a = random_tensor<double>(Shape{1, 3, 8, 8}, rng, 0, 1);
    const Tensord b = random_tensor<double>(Shape{1, 3, 8, 8}, rng, 0, 1);
    EXPECT_NEAR(delta_e(a, b), oracle_delta_e(a, b), 1e-6);
    EXPECT_GE(delta_e(a, b), 0.0);
  }
}

TEST(Srgb, TransferRoundTrip) {
  EXPECT_NEAR(srgb_encode(0.5), 0.735357, 1e-6);
  for (double v = 0; v <= 1.0; v += 0.01) EXPECT_NEAR(srgb_decode(srgb_encode(v)), v, 1e-12);
}

TEST(Tmqi, RangeOnRandomPairs) {
  Rng rng(4);
  for (int t = 0; t < 1000; ++t) {
    const int h = 11 + static_cast<int>(rng.below(14)), w = 11 + static_cast<int>(rng.below(14));
    Tensord hdr(Shape{1, 3, h, w}), ldr(Shape{1, 3, h, w});
    const double spread = rng.uniform(0, 8);
    for (auto& v : hdr.values()) v = std::exp(rng.uniform(-spread, spread));
    for (auto& v : ldr.values()) v = rng.uniform();
    const TmqiResult r = tmqi(ldr, hdr);
    ASSERT_TRUE(std::isfinite(r.q));
    ASSERT_GE(r.q, 0.0);
    ASSERT_LE(r.q, 1.0);
    ASSERT_GE(r.s, 0.0);
    ASSERT_LE(r.s, 1.0);
    ASSERT_GE(r.n, 0.0);
    ASSERT_LE(r.n, 1.0);
  }
}

TEST(Tmqi, AffineRampHasFullStructuralFidelity) {
  const Tensord hdr = gray(64, 64, [](int64_t y, int64_t x) { return 5.0 * (x + y) + 0.1; });
  const Tensord ldr = gray(64, 64, [](int64_t y, int64_t x) { return (x + y) / 126.0; });
  const TmqiResult r = tmqi(ldr, hdr, LdrEncoding::kDisplay);
  EXPECT_EQ(r.levels, 3);
  EXPECT_NEAR(r.s, 1.0, 1e-3);
}

TEST(Tmqi, PrefersToneMappedOverFlatOutput) {
  Rng rng(5);
  Tensord hdr(Shape{1, 3, 48, 48});
  for (int64_t y = 0; y < 48; ++y)
    for (int64_t x = 0; x < 48; ++x)
      for (int64_t c = 0; c < 3; ++c)
        hdr.at(0, c, y, x) = std::exp(4 * std::sin(x / 5.0) * std::cos(y / 7.0)) * (1 + 0.1 * c) * rng.uniform(0.9, 1.1);
  double peak = 0;
  for (double v : hdr.values()) peak = std::max(peak, v);
  Tensord mapped = hdr, flat(hdr.shape(), 0.5), clipped = hdr;
  for (auto& v : mapped.values()) v = std::log1p(v) / std::log1p(peak);
  for (auto& v : clipped.values()) v = std::min(1.0, v);
  const double good = tmqi(mapped, hdr).q;
  EXPECT_GT(good, tmqi(flat, hdr).q);
  EXPECT_GT(good, tmqi(clipped, hdr).q);
  EXPECT_THROW(tmqi(Tensord(Shape{1, 3, 8, 9}), hdr), DimensionError);
}

TEST(MetricReport, MeanAveragesRecords) {
  MetricReport rep;
  rep.records = {{"a", 10, 0.5, 0.2, 4}, {"b", 30, 0.7, 0.6, 2}};
  const MetricRecord m = rep.mean();
  EXPECT_DOUBLE_EQ(m.psnr, 20);
  EXPECT_DOUBLE_EQ(m.ssim, 0.6);
  EXPECT_DOUBLE_EQ(m.tmqi, 0.4);
  EXPECT_DOUBLE_EQ(m.delta_e, 3);
  EXPECT_EQ(MetricReport{}.mean().psnr, 0.0);
}
