#include "tonemap/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>

#include "json.hpp"
#include "tonemap/errors.hpp"
#include "tonemap/image_io.hpp"

namespace tonemap {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'T', 'M', 'C', 'K'};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint64_t get_le(const uint8_t* p, int bytes) {
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_tensor(std::vector<uint8_t>& out, const Tensorf& t) {
  for (float v : t.values()) put_u32(out, std::bit_cast<uint32_t>(v));
}

void get_tensor(const uint8_t* p, Tensorf& t) {
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = std::bit_cast<float>(static_cast<uint32_t>(get_le(p + 4 * i, 4)));
}

json shape_json(const Shape& s) { return json::array({s.n, s.c, s.h, s.w}); }

json config_json(const ModelConfig& c) {
  return {{"width", c.width},
          {"encoder_width", c.encoder_width},
          {"descriptor_dim", c.descriptor_dim},
          {"grid", c.grid},
          {"lut_size", c.lut_size},
          {"lut_count", c.lut_count},
          {"residual_output_scale", c.residual_output_scale},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.width = j.at("width").get<int>();
  c.encoder_width = j.at("encoder_width").get<int>();
  c.descriptor_dim = j.at("descriptor_dim").get<int>();
  c.grid = j.at("grid").get<int>();
  c.lut_size = j.at("lut_size").get<int>();
  c.lut_count = j.at("lut_count").get<int>();
  c.residual_output_scale = j.at("residual_output_scale").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

struct ParsedHeader {
  json manifest;
  const uint8_t* payload = nullptr;
  uint64_t payload_size = 0;
};

ParsedHeader parse_header(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError("checkpoint: bad magic");
  }
  const uint32_t version = static_cast<uint32_t>(get_le(bytes.data() + 4, 4));
  if (version != kCheckpointVersion) {
    throw VersionMismatchError("checkpoint: file version " + std::to_string(version) + ", expected " +
                               std::to_string(kCheckpointVersion));
  }
  const uint64_t manifest_len = get_le(bytes.data() + 8, 8);
  if (manifest_len > bytes.size() - 16) throw CheckpointError("checkpoint: truncated manifest");
  ParsedHeader out;
  try {
    out.manifest = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<int64_t>(manifest_len));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: corrupt manifest: ") + e.what());
  }
  out.payload = bytes.data() + 16 + manifest_len;
  out.payload_size = bytes.size() - 16 - manifest_len;
  return out;
}

Checkpoint load_into(const ParsedHeader& header, Model<float> model) {
  const json& m = header.manifest;
  Checkpoint out;
  try {
    const uint64_t declared = m.at("payload_bytes").get<uint64_t>();
    if (header.payload_size < declared) {
      throw CheckpointError("checkpoint: corrupt payload (" + std::to_string(header.payload_size) + " of " +
                            std::to_string(declared) + " bytes present)");
    }
    if (header.payload_size > declared) throw CheckpointError("checkpoint: trailing bytes after payload");

    std::map<std::string, const json*> entries;
    uint64_t shape_sum = 0;
    for (const json& p : m.at("params")) {
      entries[p.at("name").get<std::string>()] = &p;
      const auto s = p.at("shape").get<std::vector<int64_t>>();
      if (s.size() != 4) throw CheckpointError("checkpoint: parameter shape must have rank 4");
      shape_sum += static_cast<uint64_t>(s[0] * s[1] * s[2] * s[3]) * 4;
    }
    if (entries.size() != model.params.size()) {
      for (const auto& [name, _] : entries) {
        if (!model.params.find(name)) throw ShapeMismatchError(name, "not present in the model");
      }
    }
    for (size_t i = 0; i < model.params.size(); ++i) {
      const ParamId id = static_cast<ParamId>(i);
      const std::string& name = model.params.name(id);
      const auto it = entries.find(name);
      if (it == entries.end()) throw ShapeMismatchError(name, "missing from checkpoint");
      const json& e = *it->second;
      const auto s = e.at("shape").get<std::vector<int64_t>>();
      Tensorf& value = model.params.value(id);
      const Shape shape{s[0], s[1], s[2], s[3]};
      if (!(shape == value.shape())) {
        throw ShapeMismatchError(name, "checkpoint shape " + shape.str() + " vs model " + value.shape().str());
      }
      const uint64_t offset = e.at("offset").get<uint64_t>();
      if (offset + static_cast<uint64_t>(value.numel()) * 4 > declared) {
        throw CheckpointError("checkpoint: parameter " + name + " lies outside the payload");
      }
      get_tensor(header.payload + offset, value);
    }

    uint64_t optim_bytes = 0;
    if (m.contains("optimizer") && !m.at("optimizer").is_null()) {
      const json& o = m.at("optimizer");
      AdamWConfig cfg;
      cfg.lr = o.at("lr").get<double>();
      cfg.beta1 = o.at("beta1").get<double>();
      cfg.beta2 = o.at("beta2").get<double>();
      cfg.weight_decay = o.at("weight_decay").get<double>();
      cfg.eps = o.at("eps").get<double>();
      OptimState<float> state(model.params, cfg);
      state.step = o.at("step").get<int64_t>();
      uint64_t offset = o.at("offset").get<uint64_t>();
      for (size_t i = 0; i < model.params.size(); ++i) {
        for (Tensorf* t : {&state.first_moment[i], &state.second_moment[i]}) {
          if (offset + static_cast<uint64_t>(t->numel()) * 4 > declared) {
            throw CheckpointError("checkpoint: optimizer state lies outside the payload");
          }
          get_tensor(header.payload + offset, *t);
          offset += static_cast<uint64_t>(t->numel()) * 4;
          optim_bytes += static_cast<uint64_t>(t->numel()) * 4;
        }
      }
      out.optimizer = std::move(state);
    }
    if (shape_sum + optim_bytes != declared) {
      throw CheckpointError("checkpoint: manifest shapes do not account for the payload length");
    }
    const json hyper = m.value("hyperparameters", json::object());
    for (const auto& [k, v] : hyper.items()) {
      out.hyperparameters[k] = v.get<std::string>();
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: corrupt manifest: ") + e.what());
  }
  out.model = std::move(model);
  return out;
}

}  // namespace

std::vector<uint8_t> serialize_checkpoint(const Model<float>& model,
                                          const std::map<std::string, std::string>& hyperparameters,
                                          const OptimState<float>* optimizer) {
  json manifest;
  manifest["format"] = "tonemap-checkpoint";
  manifest["config"] = config_json(model.config);
  manifest["hyperparameters"] = hyperparameters;
  json params = json::array();
  uint64_t offset = 0;
  for (size_t i = 0; i < model.params.size(); ++i) {
    const Tensorf& v = model.params.value(static_cast<ParamId>(i));
    params.push_back({{"name", model.params.name(static_cast<ParamId>(i))},
                      {"shape", shape_json(v.shape())},
                      {"offset", offset}});
    offset += static_cast<uint64_t>(v.numel()) * 4;
  }
  manifest["params"] = std::move(params);
  if (optimizer != nullptr) {
    if (optimizer->first_moment.size() != model.params.size()) {
      throw DimensionError("checkpoint: optimizer state does not match the parameter set");
    }
    manifest["optimizer"] = {{"step", optimizer->step},
                             {"lr", optimizer->config.lr},
                             {"beta1", optimizer->config.beta1},
                             {"beta2", optimizer->config.beta2},
                             {"weight_decay", optimizer->config.weight_decay},
                             {"eps", optimizer->config.eps},
                             {"offset", offset}};
    for (size_t i = 0; i < model.params.size(); ++i) {
      offset += static_cast<uint64_t>(optimizer->first_moment[i].numel() + optimizer->second_moment[i].numel()) * 4;
    }
  } else {
    manifest["optimizer"] = nullptr;
  }
  manifest["payload_bytes"] = offset;

  const std::string text = manifest.dump();
  std::vector<uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (size_t i = 0; i < model.params.size(); ++i) put_tensor(out, model.params.value(static_cast<ParamId>(i)));
  if (optimizer != nullptr) {
    for (size_t i = 0; i < model.params.size(); ++i) {
      put_tensor(out, optimizer->first_moment[i]);
      put_tensor(out, optimizer->second_moment[i]);
    }
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::vector<uint8_t>& bytes) {
  ParsedHeader header = parse_header(bytes);
  ModelConfig config;
  try {
    config = config_from_json(header.manifest.at("config"));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: corrupt manifest: ") + e.what());
  }
  return load_into(header, Model<float>::create(config));
}

Checkpoint deserialize_checkpoint(const std::vector<uint8_t>& bytes, const ModelConfig& expected) {
  return load_into(parse_header(bytes), Model<float>::create(expected));
}

void save_checkpoint(const std::string& path, const Model<float>& model,
                     const std::map<std::string, std::string>& hyperparameters, const OptimState<float>* optimizer) {
  io::write_file(path, serialize_checkpoint(model, hyperparameters, optimizer));
}

Checkpoint load_checkpoint(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError(path, "no such file");
  return deserialize_checkpoint(io::read_file(path));
}

Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expected) {
  if (!std::filesystem::exists(path)) throw IoError(path, "no such file");
  return deserialize_checkpoint(io::read_file(path), expected);
}

}  // namespace tonemap
