#include "tonemap/ide.hpp"

#include "tonemap/errors.hpp"

namespace tonemap {

template <typename T>
IdeParams make_ide(ParameterSet<T>& params, Rng& rng, int width, double output_scale, const std::string& prefix) {
  IdeParams p;
  p.width = width;
  for (int k = kPyramidScales - 1; k >= 0; --k) {
    const std::string name = prefix + ".stage" + std::to_string(k);
    IdeStage& s = p.stages[k];
    s.entry = make_conv(params, rng, name + ".entry", 6, width, 3);
    s.blocks[0] = make_residual_block(params, rng, name + ".block0", width);
    s.blocks[1] = make_residual_block(params, rng, name + ".block1", width);
    LayerInit out;
    out.scale = output_scale;
    s.exit = make_conv(params, rng, name + ".exit", width, 3, 3, out);
  }
  return p;
}

template <typename T>
IdeOutput<T> ide_refine(Tape<T>& tape, const Var<T>& coarse, const PyramidStack<T>& stack, const IdeParams& p) {
  IdeOutput<T> out;
  out.levels[kPyramidScales] = coarse;
  Var<T> t = coarse;
  for (int k = kPyramidScales - 1; k >= 0; --k) {
    Var<T> up = ops::upsample_bilinear2x(t);
    const Shape hs = stack.hf[k].shape();
    if (up.shape() != hs) {
      throw DimensionError("ide: upsampled " + up.shape().str() + " does not match high-frequency map " + hs.str());
    }
    const IdeStage& s = p.stages[k];
    Var<T> f = ops::concat_channels<T>({up, stack.hf[k]});
    Var<T> r = ops::relu(apply(tape, s.entry, f));
    r = apply(tape, s.blocks[0], r);
    r = apply(tape, s.blocks[1], r);
    t = ops::add(up, apply(tape, s.exit, r));
    out.levels[k] = t;
  }
  return out;
}

#define TONEMAP_INSTANTIATE(T)                                                                     \
  template IdeParams make_ide(ParameterSet<T>&, Rng&, int, double, const std::string&);            \
  template IdeOutput<T> ide_refine(Tape<T>&, const Var<T>&, const PyramidStack<T>&, const IdeParams&);
TONEMAP_INSTANTIATE(float)
TONEMAP_INSTANTIATE(double)
#undef TONEMAP_INSTANTIATE

}  // namespace tonemap
