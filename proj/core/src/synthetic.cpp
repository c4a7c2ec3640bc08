#include "tonemap/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "tonemap/errors.hpp"
#include "tonemap/image_io.hpp"
#include "tonemap/normalize.hpp"
#include "tonemap/rng.hpp"

namespace tonemap {

Tensorf synthetic_hdr_scene(int h, int w, uint64_t seed) {
  if (h < 1 || w < 1) throw DimensionError("synthetic_hdr_scene: empty extent");
  Rng rng(seed);
  double base[3], top[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = rng.uniform(0.05, 0.3);
    top[c] = rng.uniform(0.2, 1.0);
  }
  const double angle = rng.uniform(0, 2 * M_PI);
  const double dir_y = std::sin(angle), dir_x = std::cos(angle);

  struct Light {
    double y, x, radius, gain;
    double tint[3];
  };
  std::vector<Light> lights(1 + rng.below(3));
  for (auto& l : lights) {
    l.y = rng.uniform(0, 1);
    l.x = rng.uniform(0, 1);
    l.radius = rng.uniform(0.04, 0.15);
    l.gain = std::pow(2.0, rng.uniform(3, 8));
    for (double& t : l.tint) t = rng.uniform(0.6, 1.0);
  }
  struct Box {
    double y0, x0, y1, x1;
    double albedo[3];
  };
  std::vector<Box> boxes(2 + rng.below(3));
  for (auto& b : boxes) {
    b.y0 = rng.uniform(0, 0.8);
    b.x0 = rng.uniform(0, 0.8);
    b.y1 = std::min(1.0, b.y0 + rng.uniform(0.1, 0.4));
    b.x1 = std::min(1.0, b.x0 + rng.uniform(0.1, 0.4));
    for (double& a : b.albedo) a = rng.uniform(0.1, 0.9);
  }
  const double freq = rng.uniform(8, 20), texture = rng.uniform(0.05, 0.2);
  const double shade = rng.uniform(0.1, 0.5);

  Tensorf out(Shape{1, 3, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = (y + 0.5) / h, u = (x + 0.5) / w;
      const double t = std::clamp(0.5 + 0.7 * ((v - 0.5) * dir_y + (u - 0.5) * dir_x), 0.0, 1.0);
      const double tex = 1.0 + texture * std::sin(2 * M_PI * freq * u) * std::cos(2 * M_PI * freq * 0.7 * v);
      for (int c = 0; c < 3; ++c) {
        double value = (base[c] + (top[c] - base[c]) * t) * tex;
        for (const auto& b : boxes) {
          if (v >= b.y0 && v < b.y1 && u >= b.x0 && u < b.x1) {
            const double ramp = (v - b.y0) / std::max(1e-6, b.y1 - b.y0);
            value = b.albedo[c] * (1.0 - shade * ramp) * tex;
          }
        }
        for (const auto& l : lights) {
          const double d2 = (v - l.y) * (v - l.y) + (u - l.x) * (u - l.x);
          value += l.gain * l.tint[c] * std::exp(-d2 / (2 * l.radius * l.radius)) * 0.1;
        }
        out.at(0, c, y, x) = static_cast<float>(value);
      }
    }
  }
  return out;
}

Tensorf apply_tone_operator(const Tensorf& normalized, ToneOperator op) {
  Tensorf out(normalized.shape());
  const int64_t plane = normalized.shape().plane();
  for (int64_t n = 0; n < normalized.n(); ++n) {
    for (int64_t i = 0; i < plane; ++i) {
      double rgb[3];
      for (int c = 0; c < 3; ++c) rgb[c] = std::clamp<double>(normalized.plane(n, c)[i], 0.0, 1.0);
      if (op == ToneOperator::kReinhard) {
        const double lum = 0.2126 * rgb[0] + 0.7152 * rgb[1] + 0.0722 * rgb[2];
        const double mapped = lum * (1 + lum / 4) / (1 + lum);
        const double ratio = lum > 0 ? mapped / lum : 0.0;
        for (double& v : rgb) v = std::clamp(v * ratio, 0.0, 1.0);
      }
      for (int c = 0; c < 3; ++c) {
        const double v = op == ToneOperator::kIdentity ? rgb[c] : std::pow(rgb[c], 1.0 / 2.2);
        out.plane(n, c)[i] = static_cast<float>(v);
      }
    }
  }
  return out;
}

ToneOperator parse_tone_operator(const std::string& name) {
  if (name == "identity") return ToneOperator::kIdentity;
  if (name == "gamma") return ToneOperator::kGamma;
  if (name == "reinhard") return ToneOperator::kReinhard;
  throw ConfigError("unknown tone operator '" + name + "'");
}

void write_synthetic_dataset(const std::string& dir, int count, int h, int w, uint64_t seed, ToneOperator op) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "hdr");
  fs::create_directories(fs::path(dir) / "ldr");
  for (int i = 0; i < count; ++i) {
    const Tensorf hdr = synthetic_hdr_scene(h, w, seed + static_cast<uint64_t>(i) * 7919);
    const Tensorf ldr = apply_tone_operator(normalize_hdr(hdr).image, op);
    char stem[32];
    std::snprintf(stem, sizeof(stem), "scene_%03d", i);
    io::write_file((fs::path(dir) / "hdr" / (std::string(stem) + ".pfm")).string(), io::encode_pfm(hdr));
    io::write_file((fs::path(dir) / "ldr" / (std::string(stem) + ".pfm")).string(), io::encode_pfm(ldr));
  }
}

}  // namespace tonemap
