#pragma once

#include <string>
#include <vector>

#include "tonemap/tensor.hpp"

// Evaluation metrics. All are computed in double precision regardless of the
// input scalar type. Images are (n, c, h, w); metrics average over the batch.
namespace tonemap::metrics {

inline constexpr double kPsnrCap = 99.0;

// How LDR values in [0,1] are to be interpreted.
enum class LdrEncoding { kLinear, kDisplay };

template <typename T>
double mse(const Tensor<T>& a, const Tensor<T>& b);

// 10 log10(peak^2 / MSE), capped at 99 dB.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0);

// Single-scale SSIM, 11-tap Gaussian window (sigma 1.5), valid region,
// averaged over channels. Images smaller than 11 px use the largest odd
// window that fits.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b);

// Mean CIE76 distance after RGB -> XYZ (D65) -> Lab.
template <typename T>
double delta_e(const Tensor<T>& a, const Tensor<T>& b, LdrEncoding encoding = LdrEncoding::kLinear);

struct TmqiResult {
  double q = 0;
  double s = 0;  // structural fidelity
  double n = 0;  // statistical naturalness
  int levels = 0;
};

// Tone-mapped image quality index of `ldr` (3-channel, [0,1]) against the
// HDR source. Only the first image of a batch is scored.
template <typename T>
TmqiResult tmqi(const Tensor<T>& ldr, const Tensor<T>& hdr, LdrEncoding encoding = LdrEncoding::kLinear);

// sRGB transfer function pair.
double srgb_encode(double linear);
double srgb_decode(double encoded);

// RGB (linear, sRGB primaries) -> CIE Lab, D65 white.
void rgb_to_lab(double r, double g, double b, double lab[3]);

struct MetricRecord {
  std::string name;
  double psnr = 0;
  double ssim = 0;
  double tmqi = 0;
  double delta_e = 0;
};

struct MetricReport {
  std::vector<MetricRecord> records;
  MetricRecord mean() const;
};

}  // namespace tonemap::metrics
