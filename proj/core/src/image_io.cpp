#include "tonemap/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "tonemap/errors.hpp"
#include "tonemap/metrics.hpp"

namespace tonemap::io {
namespace {

// Reads whitespace-separated header tokens from a binary buffer.
class Cursor {
 public:
  explicit Cursor(const Bytes& bytes) : bytes_(bytes) {}

  bool at_end() const { return pos_ >= bytes_.size(); }
  size_t pos() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }
  const uint8_t* here() const { return bytes_.data() + pos_; }
  void advance(size_t n) { pos_ += n; }

  std::string line() {
    std::string out;
    while (pos_ < bytes_.size() && bytes_[pos_] != '\n') out.push_back(static_cast<char>(bytes_[pos_++]));
    if (pos_ < bytes_.size()) ++pos_;
    return out;
  }

  std::string token() {
    while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) out.push_back(static_cast<char>(bytes_[pos_++]));
    return out;
  }

  // Consumes exactly one whitespace byte (the separator before binary data).
  void single_space() {
    if (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
  }

 private:
  const Bytes& bytes_;
  size_t pos_ = 0;
};

std::string lower_extension(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

void read_rle_scanline(Cursor& cur, int w, std::vector<uint8_t>& line) {
  // line holds 4 planes of w bytes each.
  for (int ch = 0; ch < 4; ++ch) {
    int x = 0;
    while (x < w) {
      if (cur.remaining() < 1) throw TruncatedDataError("radiance: truncated run-length scanline");
      int count = *cur.here();
      cur.advance(1);
      if (count > 128) {
        count -= 128;
        if (count > w - x) throw FormatError("radiance: run exceeds scanline");
        if (cur.remaining() < 1) throw TruncatedDataError("radiance: truncated run-length scanline");
        std::fill_n(line.begin() + ch * w + x, count, *cur.here());
        cur.advance(1);
      } else {
        if (count == 0 || count > w - x) throw FormatError("radiance: bad literal run");
        if (cur.remaining() < static_cast<size_t>(count)) {
          throw TruncatedDataError("radiance: truncated run-length scanline");
        }
        std::copy_n(cur.here(), count, line.begin() + ch * w + x);
        cur.advance(count);
      }
      x += count;
    }
  }
}

// One channel plane of a new-style run-length scanline.
void write_rle_plane(Bytes& out, const uint8_t* data, int w) {
  int x = 0;
  while (x < w) {
    int run = 1;
    while (x + run < w && run < 127 && data[x + run] == data[x]) ++run;
    if (run >= 4) {
      out.push_back(static_cast<uint8_t>(128 + run));
      out.push_back(data[x]);
      x += run;
      continue;
    }
    int lit = 0;
    while (x + lit < w && lit < 128) {
      int ahead = 1;
      while (x + lit + ahead < w && ahead < 4 && data[x + lit + ahead] == data[x + lit]) ++ahead;
      if (ahead >= 4) break;
      ++lit;
    }
    out.push_back(static_cast<uint8_t>(lit));
    out.insert(out.end(), data + x, data + x + lit);
    x += lit;
  }
}

void put_u32(Bytes& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

}  // namespace

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path, "read failed");
  return bytes;
}

void write_file(const std::string& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path, "write failed");
}

void float_to_rgbe(float r, float g, float b, uint8_t out[4]) {
  const float v = std::max({r, g, b});
  if (v < 1e-32f) {
    out[0] = out[1] = out[2] = out[3] = 0;
    return;
  }
  int e = 0;
  const float scale = std::frexp(v, &e) * 256.0f / v;
  out[0] = static_cast<uint8_t>(r * scale);
  out[1] = static_cast<uint8_t>(g * scale);
  out[2] = static_cast<uint8_t>(b * scale);
  out[3] = static_cast<uint8_t>(e + 128);
}

void rgbe_to_float(const uint8_t in[4], float out[3]) {
  if (in[3] == 0) {
    out[0] = out[1] = out[2] = 0.0f;
    return;
  }
  const double f = std::ldexp(1.0, static_cast<int>(in[3]) - (128 + 8));
  for (int c = 0; c < 3; ++c) out[c] = static_cast<float>((in[c] + 0.5) * f);
}

Tensorf decode_radiance(const Bytes& bytes) {
  Cursor cur(bytes);
  const std::string magic = cur.line();
  if (magic.rfind("#?RADIANCE", 0) != 0 && magic.rfind("#?RGBE", 0) != 0) {
    throw BadMagicError("radiance: missing #?RADIANCE signature");
  }
  for (;;) {
    if (cur.at_end()) throw TruncatedDataError("radiance: header not terminated");
    const std::string line = cur.line();
    if (line.empty()) break;
    if (line.rfind("FORMAT=", 0) == 0 && line != "FORMAT=32-bit_rle_rgbe") {
      throw UnsupportedLayoutError("radiance: unsupported " + line);
    }
  }
  const std::string res = cur.line();
  char ya[3] = {}, xa[3] = {};
  int h = 0, w = 0;
  if (std::sscanf(res.c_str(), "%2s %d %2s %d", ya, &h, xa, &w) != 4) {
    throw FormatError("radiance: bad resolution line '" + res + "'");
  }
  if (std::string(ya) != "-Y" || std::string(xa) != "+X") {
    throw UnsupportedLayoutError("radiance: unsupported orientation '" + res + "'");
  }
  if (h <= 0 || w <= 0) throw FormatError("radiance: empty image");

  Tensorf out(Shape{1, 3, h, w});
  std::vector<uint8_t> line(static_cast<size_t>(w) * 4);
  for (int y = 0; y < h; ++y) {
    const bool rle = w >= 8 && w < 32768 && cur.remaining() >= 4 && cur.here()[0] == 2 && cur.here()[1] == 2 &&
                     (cur.here()[2] & 0x80) == 0;
    if (rle) {
      const int len = (cur.here()[2] << 8) | cur.here()[3];
      if (len != w) throw FormatError("radiance: scanline length mismatch");
      cur.advance(4);
      read_rle_scanline(cur, w, line);
      for (int x = 0; x < w; ++x) {
        const uint8_t px[4] = {line[x], line[w + x], line[2 * w + x], line[3 * w + x]};
        float rgb[3];
        rgbe_to_float(px, rgb);
        for (int c = 0; c < 3; ++c) out.at(0, c, y, x) = rgb[c];
      }
    } else {
      if (cur.remaining() < static_cast<size_t>(w) * 4) throw TruncatedDataError("radiance: truncated scanline");
      for (int x = 0; x < w; ++x) {
        float rgb[3];
        rgbe_to_float(cur.here(), rgb);
        cur.advance(4);
        for (int c = 0; c < 3; ++c) out.at(0, c, y, x) = rgb[c];
      }
    }
  }
  return out;
}

Bytes encode_radiance(const Tensorf& image, bool run_length) {
  if (image.c() != 3 || image.n() != 1) throw DimensionError("radiance: expected (1,3,h,w), got " + image.shape().str());
  for (float v : image.values()) {
    if (!std::isfinite(v) || v < 0) throw NumericError("radiance: values must be finite and nonnegative");
  }
  std::ostringstream header;
  header << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " << image.h() << " +X " << image.w() << "\n";
  const std::string hs = header.str();
  Bytes out(hs.begin(), hs.end());
  const int w = static_cast<int>(image.w());
  const bool rle = run_length && w >= 8 && w < 32768;
  std::vector<uint8_t> planes(static_cast<size_t>(w) * 4);
  for (int64_t y = 0; y < image.h(); ++y) {
    for (int x = 0; x < w; ++x) {
      uint8_t px[4];
      float_to_rgbe(image.at(0, 0, y, x), image.at(0, 1, y, x), image.at(0, 2, y, x), px);
      if (!rle) {
        out.insert(out.end(), px, px + 4);
      } else {
        for (int c = 0; c < 4; ++c) planes[static_cast<size_t>(c) * w + x] = px[c];
      }
    }
    if (rle) {
      out.insert(out.end(), {2, 2, static_cast<uint8_t>(w >> 8), static_cast<uint8_t>(w & 0xff)});
      for (int c = 0; c < 4; ++c) write_rle_plane(out, planes.data() + static_cast<size_t>(c) * w, w);
    }
  }
  return out;
}

Tensorf decode_pfm(const Bytes& bytes) {
  Cursor cur(bytes);
  const std::string magic = cur.token();
  int channels = 0;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    throw BadMagicError("pfm: expected PF or Pf");
  }
  const std::string ws = cur.token(), hs = cur.token(), ss = cur.token();
  cur.single_space();
  int w = 0, h = 0;
  double scale = 0;
  try {
    w = std::stoi(ws);
    h = std::stoi(hs);
    scale = std::stod(ss);
  } catch (const std::exception&) {
    throw FormatError("pfm: malformed header");
  }
  if (w <= 0 || h <= 0 || scale == 0.0) throw FormatError("pfm: malformed header");
  const bool little = scale < 0;
  const size_t count = static_cast<size_t>(w) * h * channels;
  if (cur.remaining() < count * 4) throw TruncatedDataError("pfm: truncated payload");
  Tensorf out(Shape{1, channels, h, w});
  const uint8_t* p = cur.here();
  for (int row = 0; row < h; ++row) {
    const int y = h - 1 - row;
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        uint32_t bits = 0;
        for (int i = 0; i < 4; ++i) bits |= static_cast<uint32_t>(p[i]) << (little ? 8 * i : 8 * (3 - i));
        p += 4;
        out.at(0, c, y, x) = std::bit_cast<float>(bits);
      }
    }
  }
  return out;
}

Bytes encode_pfm(const Tensorf& image) {
  if (image.n() != 1 || (image.c() != 3 && image.c() != 1)) {
    throw DimensionError("pfm: expected (1,3,h,w) or (1,1,h,w), got " + image.shape().str());
  }
  if (!image.all_finite()) throw NumericError("pfm: refusing to write non-finite values");
  std::ostringstream header;
  header << (image.c() == 3 ? "PF" : "Pf") << "\n" << image.w() << " " << image.h() << "\n-1.0\n";
  const std::string hs = header.str();
  Bytes out(hs.begin(), hs.end());
  for (int64_t row = 0; row < image.h(); ++row) {
    const int64_t y = image.h() - 1 - row;
    for (int64_t x = 0; x < image.w(); ++x) {
      for (int64_t c = 0; c < image.c(); ++c) put_u32(out, std::bit_cast<uint32_t>(image.at(0, c, y, x)));
    }
  }
  return out;
}

uint8_t encode_srgb8(double linear) {
  if (std::isnan(linear)) linear = 0.0;
  return static_cast<uint8_t>(std::floor(metrics::srgb_encode(linear) * 255.0 + 0.5));
}

Bytes encode_png8(const Tensorf& linear) {
  if (linear.n() != 1 || (linear.c() != 3 && linear.c() != 1)) {
    throw DimensionError("png: expected (1,3,h,w) or (1,1,h,w), got " + linear.shape().str());
  }
  const int64_t c = linear.c(), plane = linear.shape().plane();
  std::vector<uint8_t> pixels(static_cast<size_t>(plane * c));
  for (int64_t i = 0; i < plane; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) pixels[i * c + ch] = encode_srgb8(linear.plane(0, ch)[i]);
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(linear.w());
  img.height = static_cast<png_uint_32>(linear.h());
  img.format = c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("png: ") + img.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("png: ") + img.message);
  }
  out.resize(size);
  return out;
}

Tensorf decode_png(const Bytes& bytes) {
  static const uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0) throw BadMagicError("png: bad signature");
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw FormatError(std::string("png: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<uint8_t> pixels(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw TruncatedDataError(std::string("png: ") + img.message);
  }
  float table[256];
  for (int i = 0; i < 256; ++i) table[i] = static_cast<float>(metrics::srgb_decode(i / 255.0));
  Tensorf out(Shape{1, 3, img.height, img.width});
  const int64_t plane = out.shape().plane();
  for (int64_t i = 0; i < plane; ++i) {
    for (int ch = 0; ch < 3; ++ch) out.plane(0, ch)[i] = table[pixels[i * 3 + ch]];
  }
  return out;
}

HdrImage read_image(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError(path, "no such file");
  const std::string ext = lower_extension(path);
  const Bytes bytes = read_file(path);
  if (ext == ".hdr" || ext == ".pic" || ext == ".rgbe") return {decode_radiance(bytes), ImageFormat::kRadiance};
  if (ext == ".pfm") {
    Tensorf t = decode_pfm(bytes);
    if (t.c() == 1) {
      Tensorf rgb(Shape{1, 3, t.h(), t.w()});
      for (int c = 0; c < 3; ++c) std::copy_n(t.data(), t.numel(), rgb.plane(0, c));
      t = std::move(rgb);
    }
    return {std::move(t), ImageFormat::kPfm};
  }
  if (ext == ".png") return {decode_png(bytes), ImageFormat::kPng};
  throw UnsupportedLayoutError(path + ": unknown image extension '" + ext + "'");
}

void write_image(const std::string& path, const Tensorf& image) {
  const std::string ext = lower_extension(path);
  if (ext == ".hdr" || ext == ".pic" || ext == ".rgbe") {
    write_file(path, encode_radiance(image));
  } else if (ext == ".pfm") {
    write_file(path, encode_pfm(image));
  } else if (ext == ".png") {
    write_file(path, encode_png8(image));
  } else {
    throw UnsupportedLayoutError(path + ": unknown image extension '" + ext + "'");
  }
}

}  // namespace tonemap::io
