#include <gtest/gtest.h>

#include <cstring>

#include "json.hpp"

#include "test_support.hpp"
#include "tonemap/checkpoint.hpp"
#include "tonemap/errors.hpp"
#include "tonemap/image_io.hpp"

using namespace tonemap;
using tonemap::testing::scratch_dir;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.width = 4;
  cfg.encoder_width = 4;
  cfg.lut_size = 3;
  cfg.seed = 11;
  return cfg;
}

bool bit_equal(const Tensorf& a, const Tensorf& b) {
  return a.shape() == b.shape() && std::memcmp(a.data(), b.data(), a.numel() * sizeof(float)) == 0;
}

nlohmann::json manifest_of(const std::vector<uint8_t>& bytes) {
  uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 8);
  return nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len));
}

}  // namespace

TEST(Checkpoint, BitExactRoundTripWithOptimizer) {
  Model<float> m = Model<float>::create(tiny_config());
  OptimState<float> opt(m.params, AdamWConfig{3e-4, 0.8, 0.95, 0.01, 1e-7});
  opt.step = 17;
  for (auto& t : opt.first_moment) t.fill(0.25f);
  const auto dir = scratch_dir("ckpt");
  const std::string path = (dir / "m.tmck").string();
  save_checkpoint(path, m, {{"lr", "0.0003"}}, &opt);

  const Checkpoint c = load_checkpoint(path, tiny_config());
  ASSERT_EQ(c.model.params.size(), m.params.size());
  for (size_t i = 0; i < m.params.size(); ++i) {
    const auto id = static_cast<ParamId>(i);
    EXPECT_EQ(c.model.params.name(id), m.params.name(id));
    EXPECT_TRUE(bit_equal(c.model.params.value(id), m.params.value(id))) << m.params.name(id);
  }
  EXPECT_EQ(c.hyperparameters.at("lr"), "0.0003");
  ASSERT_TRUE(c.optimizer.has_value());
  EXPECT_EQ(c.optimizer->step, 17);
  EXPECT_DOUBLE_EQ(c.optimizer->config.beta1, 0.8);
  EXPECT_EQ(c.optimizer->first_moment[3][0], 0.25f);
  EXPECT_EQ(c.model.config.width, 4);

  // Config-free load rebuilds the same architecture from the manifest.
  const Checkpoint free = load_checkpoint(path);
  EXPECT_EQ(free.model.params.count(), m.params.count());
  EXPECT_FALSE(deserialize_checkpoint(serialize_checkpoint(m)).optimizer.has_value());
}

TEST(Checkpoint, ManifestShapesSumToPayload) {
  const Model<float> m = Model<float>::create(tiny_config());
  const auto bytes = serialize_checkpoint(m);
  const auto manifest = manifest_of(bytes);
  int64_t total = 0;
  for (const auto& p : manifest["params"]) {
    int64_t n = 1;
    for (int64_t d : p["shape"]) n *= d;
    EXPECT_EQ(p["offset"].get<int64_t>(), total * 4);
    total += n;
  }
  EXPECT_EQ(total, m.params.count());
  EXPECT_EQ(manifest["payload_bytes"].get<int64_t>(), total * 4);
  uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 8);
  EXPECT_EQ(bytes.size(), 16 + len + static_cast<uint64_t>(total) * 4);
}

TEST(Checkpoint, TruncatedAndCorruptFiles) {
  const auto bytes = serialize_checkpoint(Model<float>::create(tiny_config()));
  try {
    deserialize_checkpoint(std::vector<uint8_t>(bytes.begin(), bytes.end() - 3));
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("corrupt payload"), std::string::npos) << e.what();
  }
  EXPECT_THROW(deserialize_checkpoint(std::vector<uint8_t>(bytes.begin(), bytes.begin() + 10)), CheckpointError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(bad_magic), CheckpointError);
  auto bad_json = bytes;
  bad_json[16] = '!';
  EXPECT_THROW(deserialize_checkpoint(bad_json), CheckpointError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(deserialize_checkpoint(trailing), CheckpointError);
  EXPECT_THROW(load_checkpoint("/nonexistent/x.tmck"), IoError);
}

TEST(Checkpoint, VersionMismatchIsExplicit) {
  auto bytes = serialize_checkpoint(Model<float>::create(tiny_config()));
  bytes[4] = 2;
  EXPECT_THROW(deserialize_checkpoint(bytes), VersionMismatchError);
}

TEST(Checkpoint, LutCountMismatchNamesParameter) {
  ModelConfig r8 = tiny_config(), r4 = tiny_config();
  r8.lut_count = 8;
  r4.lut_count = 4;
  const auto bytes = serialize_checkpoint(Model<float>::create(r8));
  try {
    deserialize_checkpoint(bytes, r4);
    FAIL();
  } catch (const ShapeMismatchError& e) {
    EXPECT_EQ(e.parameter().rfind("ltt.", 0), 0u) << e.parameter();
    EXPECT_NE(std::string(e.what()).find(e.parameter()), std::string::npos);
  }
}
