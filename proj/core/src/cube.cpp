#include "tonemap/cube.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "tonemap/errors.hpp"
#include "tonemap/image_io.hpp"

namespace tonemap::io {

std::string format_cube(const Lut3D<float>& lut, const std::string& title) {
  std::string out;
  if (!title.empty()) out += "TITLE \"" + title + "\"\n";
  out += "LUT_3D_SIZE " + std::to_string(lut.size()) + "\n";
  out += "DOMAIN_MIN 0 0 0\nDOMAIN_MAX 1 1 1\n";
  char buf[96];
  const int v = lut.size();
  for (int b = 0; b < v; ++b) {
    for (int g = 0; g < v; ++g) {
      for (int r = 0; r < v; ++r) {
        std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", lut.at(0, r, g, b), lut.at(1, r, g, b),
                      lut.at(2, r, g, b));
        out += buf;
      }
    }
  }
  return out;
}

Lut3D<float> parse_cube(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int size = 0;
  std::vector<float> values;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line.substr(first));
    std::string key;
    ls >> key;
    if (key == "TITLE" || key == "DOMAIN_MIN" || key == "DOMAIN_MAX") continue;
    if (key == "LUT_1D_SIZE") throw UnsupportedLayoutError("cube: 1D LUTs are not supported");
    if (key == "LUT_3D_SIZE") {
      if (!(ls >> size) || size < 2) throw FormatError("cube: bad LUT_3D_SIZE on line " + std::to_string(line_no));
      continue;
    }
    std::istringstream row(line.substr(first));
    float r = 0, g = 0, b = 0;
    if (!(row >> r >> g >> b)) throw FormatError("cube: cannot parse line " + std::to_string(line_no));
    values.insert(values.end(), {r, g, b});
  }
  if (size == 0) throw FormatError("cube: missing LUT_3D_SIZE");
  const size_t nodes = static_cast<size_t>(size) * size * size;
  if (values.size() != nodes * 3) {
    throw TruncatedDataError("cube: expected " + std::to_string(nodes) + " entries, found " +
                             std::to_string(values.size() / 3));
  }
  Lut3D<float> lut(size);
  for (size_t i = 0; i < nodes; ++i) {
    for (int c = 0; c < 3; ++c) lut.entries()[static_cast<int64_t>(c * nodes + i)] = values[i * 3 + c];
  }
  return lut;
}

void export_cube(const Lut3D<float>& lut, const std::string& path, const std::string& title) {
  const std::string text = format_cube(lut, title);
  write_file(path, Bytes(text.begin(), text.end()));
}

Lut3D<float> import_cube(const std::string& path) {
  const Bytes bytes = read_file(path);
  return parse_cube(std::string(bytes.begin(), bytes.end()));
}

}  // namespace tonemap::io
