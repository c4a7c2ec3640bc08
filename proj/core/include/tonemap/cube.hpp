#pragma once

#include <string>

#include "tonemap/lut.hpp"

namespace tonemap::io {

// Text .cube with LUT_3D_SIZE and red varying fastest. Values are printed
// with enough digits to round-trip a float exactly.
std::string format_cube(const Lut3D<float>& lut, const std::string& title = "");
Lut3D<float> parse_cube(const std::string& text);

void export_cube(const Lut3D<float>& lut, const std::string& path, const std::string& title = "");
Lut3D<float> import_cube(const std::string& path);

}  // namespace tonemap::io
