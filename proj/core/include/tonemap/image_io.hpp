#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tonemap/tensor.hpp"

// Image codecs. Decoded images are (1, c, h, w) float tensors holding linear
// light; rows run top to bottom.
namespace tonemap::io {

using Bytes = std::vector<uint8_t>;

enum class ImageFormat { kRadiance, kPfm, kPng };

struct HdrImage {
  Tensorf pixels;
  ImageFormat source = ImageFormat::kRadiance;
};

Bytes read_file(const std::string& path);
void write_file(const std::string& path, const Bytes& bytes);

// Radiance RGBE. Accepts flat and new-style run-length scanlines with the
// standard "-Y h +X w" orientation.
Tensorf decode_radiance(const Bytes& bytes);
// Values must be finite and nonnegative. Run-length scanlines are used when
// requested and the width allows it, flat scanlines otherwise.
Bytes encode_radiance(const Tensorf& image, bool run_length = true);
void float_to_rgbe(float r, float g, float b, uint8_t out[4]);
void rgbe_to_float(const uint8_t in[4], float out[3]);

// Portable float map. "PF" (3 channels) and "Pf" (1 channel); a negative
// scale marks little-endian data. Rows are stored bottom-up.
Tensorf decode_pfm(const Bytes& bytes);
Bytes encode_pfm(const Tensorf& image);

// 8-bit PNG. Encoding clamps to [0,1], applies the sRGB transfer function and
// rounds half up. Decoding returns linear values in [0,1].
Bytes encode_png8(const Tensorf& linear);
Tensorf decode_png(const Bytes& bytes);
uint8_t encode_srgb8(double linear);

// Dispatch on extension (.hdr/.pic, .pfm, .png).
HdrImage read_image(const std::string& path);
void write_image(const std::string& path, const Tensorf& image);

}  // namespace tonemap::io
