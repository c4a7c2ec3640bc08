#pragma once

#include <cstdint>
#include <string>

#include "tonemap/gtp.hpp"
#include "tonemap/ide.hpp"
#include "tonemap/ldp.hpp"
#include "tonemap/ltt.hpp"

namespace tonemap {

struct ModelConfig {
  int width = 20;
  int encoder_width = 20;
  int descriptor_dim = 6;  // m
  int grid = 4;            // N
  int lut_size = 9;        // V
  int lut_count = 8;       // R
  // Init scale of the last layer of every residual branch (GTP projection, IDE exits).
  double residual_output_scale = 0.1;
  uint64_t seed = 1;

  void validate() const;
};

struct Architecture {
  LdpParams ldp;
  GtpParams gtp;
  LttParams ltt;
  IdeParams ide;
};

template <typename T>
class Model {
 public:
  ModelConfig config;
  Architecture arch;
  ParameterSet<T> params;

  // Deterministic seeded initialisation.
  static Model create(const ModelConfig& config);

  template <typename U>
  Model<U> cast() const {
    Model<U> out;
    out.config = config;
    out.arch = arch;
    out.params = params.template cast<U>();
    return out;
  }
};

template <typename T>
struct PipelineOutputs {
  Var<T> output;  // T0, unclamped
  PyramidStack<T> stack;
  Var<T> globally_mapped;  // L3^G
  LttOutput<T> ltt;
  IdeOutput<T> ide;  // T3..T0
};

// Full composition LDP -> GTP -> LTT -> IDE on an (n, 3, H, W) tensor with
// H and W divisible by 8.
template <typename T>
PipelineOutputs<T> forward_pipeline(Tape<T>& tape, const Var<T>& x, const Model<T>& model);

// Inference on any size: reflect-pads to a multiple of 8, runs the pipeline
// and crops back. Output is not clamped.
template <typename T>
Tensor<T> run_model(const Model<T>& model, const Tensor<T>& x);

template <typename T>
Tensor<T> pad_reflect(const Tensor<T>& x, int64_t new_h, int64_t new_w);

// Zero every parameter, then restore the LUT path to identity: bank entry 0
// is the identity LUT and the predictor bias is one-hot on it.
template <typename T>
void reset_to_identity_lut_path(Model<T>& model);

}  // namespace tonemap
