#pragma once

#include <cstdint>
#include <string>

#include "tonemap/tensor.hpp"

namespace tonemap {

enum class ToneOperator { kIdentity, kGamma, kReinhard };

// Procedural linear-light scene: a smooth sky-like gradient, a few soft light
// sources several stops above the background, shaded rectangles and a fine
// sinusoidal texture. Returns (1, 3, h, w) with a dynamic range of roughly
// three decades.
Tensorf synthetic_hdr_scene(int h, int w, uint64_t seed);

// Reference LDR of an already normalised HDR tensor. Inputs are clamped to
// [0,1] first. kGamma is x^(1/2.2); kReinhard maps luminance L to
// L(1 + L/4)/(1 + L) and scales colour with it before the gamma curve.
Tensorf apply_tone_operator(const Tensorf& normalized, ToneOperator op);

ToneOperator parse_tone_operator(const std::string& name);

// Writes `count` pairs as <dir>/hdr/scene_XXX.pfm and <dir>/ldr/scene_XXX.pfm.
void write_synthetic_dataset(const std::string& dir, int count, int h, int w, uint64_t seed, ToneOperator op);

}  // namespace tonemap
