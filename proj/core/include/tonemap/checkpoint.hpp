#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tonemap/model.hpp"
#include "tonemap/optim.hpp"

namespace tonemap {

// Container layout: 4-byte magic "TMCK", u32 version, u64 manifest length,
// JSON manifest, then the little-endian float32 payload. The manifest lists
// every parameter with its shape and byte offset into the payload.
inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model<float> model;
  std::map<std::string, std::string> hyperparameters;
  std::optional<OptimState<float>> optimizer;
};

std::vector<uint8_t> serialize_checkpoint(const Model<float>& model,
                                          const std::map<std::string, std::string>& hyperparameters = {},
                                          const OptimState<float>* optimizer = nullptr);

// Rebuilds the model from the manifest configuration.
Checkpoint deserialize_checkpoint(const std::vector<uint8_t>& bytes);
// Loads into a model built from `expected`; any parameter whose name or shape
// disagrees raises ShapeMismatchError naming it.
Checkpoint deserialize_checkpoint(const std::vector<uint8_t>& bytes, const ModelConfig& expected);

void save_checkpoint(const std::string& path, const Model<float>& model,
                     const std::map<std::string, std::string>& hyperparameters = {},
                     const OptimState<float>* optimizer = nullptr);
Checkpoint load_checkpoint(const std::string& path);
Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expected);

}  // namespace tonemap
