#pragma once

#include <string>

#include "tonemap/tensor.hpp"

namespace tonemap {

struct NormalizationRecord {
  std::string method = "percentile";
  double low_pct = 0.5;
  double high_pct = 99.9;
  double low_value = 0;   // luminance at low_pct
  double high_value = 0;  // luminance at high_pct
  double scale = 1;
  bool degenerate = false;
  std::string warning;
};

struct NormalizedHdr {
  Tensorf image;
  NormalizationRecord record;
};

// Rec. 709 luminance of every pixel of a (n, 3, h, w) tensor.
std::vector<double> luminance(const Tensorf& image);

// Linear-interpolated percentile (0..100) of unsorted samples.
double percentile(std::vector<double> samples, double pct);

// Scales the image so the high luminance percentile maps to 1, clamping
// negatives to 0. Constant images map to 1 and are flagged degenerate; an
// all-zero image keeps unit scale and carries a warning.
NormalizedHdr normalize_hdr(const Tensorf& image, double low_pct = 0.5, double high_pct = 99.9);

}  // namespace tonemap
