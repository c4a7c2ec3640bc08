#include "tonemap/normalize.hpp"

#include <algorithm>
#include <cmath>

#include "tonemap/errors.hpp"

namespace tonemap {

std::vector<double> luminance(const Tensorf& image) {
  if (image.c() != 3) throw DimensionError("luminance: expected 3 channels, got " + image.shape().str());
  const int64_t plane = image.shape().plane();
  std::vector<double> out;
  out.reserve(static_cast<size_t>(image.n() * plane));
  for (int64_t n = 0; n < image.n(); ++n) {
    const float* r = image.plane(n, 0);
    const float* g = image.plane(n, 1);
    const float* b = image.plane(n, 2);
    for (int64_t i = 0; i < plane; ++i) out.push_back(0.2126 * r[i] + 0.7152 * g[i] + 0.0722 * b[i]);
  }
  return out;
}

double percentile(std::vector<double> samples, double pct) {
  if (samples.empty()) throw DimensionError("percentile: no samples");
  if (!(pct >= 0.0 && pct <= 100.0)) throw ConfigError("percentile must lie in [0, 100]");
  std::sort(samples.begin(), samples.end());
  const double pos = pct / 100.0 * static_cast<double>(samples.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, samples.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return samples[lo] + t * (samples[hi] - samples[lo]);
}

NormalizedHdr normalize_hdr(const Tensorf& image, double low_pct, double high_pct) {
  if (image.numel() == 0) throw DimensionError("normalize_hdr: empty image");
  if (!(low_pct < high_pct)) throw ConfigError("normalize_hdr: low percentile must be below high percentile");
  require_finite(image, "normalize_hdr input");
  const std::vector<double> lum = luminance(image);
  NormalizedHdr out;
  auto& rec = out.record;
  rec.low_pct = low_pct;
  rec.high_pct = high_pct;
  rec.low_value = std::max(0.0, percentile(lum, low_pct));
  rec.high_value = std::max(0.0, percentile(lum, high_pct));
  const auto [mn, mx] = std::minmax_element(lum.begin(), lum.end());
  if (*mx <= 0.0) {
    rec.degenerate = true;
    rec.scale = 1.0;
    rec.warning = "image has no positive luminance; unit scale applied";
  } else if (*mn == *mx) {
    rec.degenerate = true;
    rec.scale = 1.0 / *mx;
    rec.warning = "constant image; mapped to 1";
  } else if (rec.high_value <= 0.0) {
    rec.degenerate = true;
    rec.scale = 1.0 / *mx;
    rec.warning = "high percentile is zero; scaled by the maximum instead";
  } else {
    rec.scale = 1.0 / rec.high_value;
  }
  out.image = Tensorf(image.shape());
  for (int64_t i = 0; i < image.numel(); ++i) {
    out.image[i] = static_cast<float>(std::max(0.0, static_cast<double>(image[i]) * rec.scale));
  }
  return out;
}

}  // namespace tonemap
