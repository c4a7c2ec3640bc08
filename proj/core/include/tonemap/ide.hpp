#pragma once

#include <array>
#include <string>

#include "tonemap/ldp.hpp"

// Iterative detail enhancement: coarse-to-fine, T(n-1) = Up(T(n)) + R(n-1)(concat(Up(T(n)), H(n-1))).
namespace tonemap {

struct IdeStage {
  ConvLayer entry;  // 6 -> width
  std::array<ResidualBlock, 2> blocks;
  ConvLayer exit;  // width -> 3
};

struct IdeParams {
  int width = 0;
  // stages[k] refines towards resolution level k (0 = full).
  std::array<IdeStage, kPyramidScales> stages;
};

template <typename T>
struct IdeOutput {
  // levels[k] = T_k; levels[3] is the input T3, levels[0] the final output.
  std::array<Var<T>, kPyramidScales + 1> levels;
};

template <typename T>
IdeParams make_ide(ParameterSet<T>& params, Rng& rng, int width, double output_scale,
                   const std::string& prefix = "ide");

template <typename T>
IdeOutput<T> ide_refine(Tape<T>& tape, const Var<T>& coarse, const PyramidStack<T>& stack, const IdeParams& p);

}  // namespace tonemap
