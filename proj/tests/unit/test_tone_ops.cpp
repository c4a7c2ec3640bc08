#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tonemap/errors.hpp"
#include "tonemap/gradcheck.hpp"
#include "tonemap/model.hpp"
#include "tonemap/optim.hpp"

using namespace tonemap;
using tonemap::testing::max_abs;
using tonemap::testing::max_abs_diff;
using tonemap::testing::random_tensor;

namespace {

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

Tensord upsample8(Tape<double>& tape, const Tensord& t) {
  Var<double> v = tape.constant(t);
  for (int k = 0; k < 3; ++k) v = ops::upsample_bilinear2x(v);
  return v.value();
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.width = 6;
  cfg.encoder_width = 6;
  cfg.lut_size = 5;
  cfg.lut_count = 3;
  cfg.grid = 2;
  return cfg;
}

}  // namespace

TEST(Gtp, ZeroCoreAndHeadsIsResidualIdentity) {
  Rng rng(1);
  ParameterSet<double> params;
  const GtpParams p = make_gtp(params, rng, 8, 0.1);
  for (const auto& l : p.core) zero_layer(params, l);
  for (const auto& l : p.gamma_heads) zero_layer(params, l);
  for (const auto& l : p.beta_heads) zero_layer(params, l);
  const Tensord x = random_tensor<double>(Shape{1, 3, 8, 8}, rng, 0, 1);
  Tape<double> tape(&params);
  auto out = gtp_forward(tape, tape.constant(x), p);
  for (int l = 1; l <= kGtpLayers; ++l) {
    const Tensord& prev = out.features[l - 1].value();
    const Tensord& cur = out.features[l].value();
    for (int64_t i = 0; i < cur.numel(); ++i) ASSERT_EQ(cur[i], std::max(0.0, prev[i]));
  }
  zero_layer(params, p.project);
  tape.reset();
  EXPECT_EQ(max_abs_diff(gtp_forward(tape, tape.constant(x), p).output.value(), x), 0.0);
}

TEST(Gtp, ConditionSeesGlobalBrightness) {
  Rng rng(2);
  ParameterSet<float> params;
  const GtpParams p = make_gtp(params, rng, 8, 0.1);
  const Tensorf x = random_tensor<float>(Shape{1, 3, 8, 8}, rng, 0.1, 0.5);
  Tensorf brighter = x;
  for (auto& v : brighter.values()) v *= 1.8f;
  Tape<float> tape(&params);
  const Tensorf z1 = gtp_forward(tape, tape.constant(x), p).condition.value();
  const Tensorf z2 = gtp_forward(tape, tape.constant(brighter), p).condition.value();
  EXPECT_EQ(z1.shape(), (Shape{1, 8, 1, 1}));
  EXPECT_GT(max_abs_diff(z1, z2), 0.0);
  EXPECT_THROW(gtp_forward(tape, tape.constant(Tensorf(Shape{1, 4, 8, 8})), p), DimensionError);
}

TEST(Gtp, HeadGradientCheck) {
  Rng rng(3);
  ParameterSet<double> params;
  const GtpParams p = make_gtp(params, rng, 4, 1.0);
  const Tensord x = random_tensor<double>(Shape{1, 3, 6, 6}, rng, 0, 1);
  const Tensord r = random_tensor<double>(Shape{1, 3, 6, 6}, rng);
  LossFn<double> loss = [&](Tape<double>& tape) {
    return ops::sum(ops::mul(gtp_forward(tape, tape.constant(x), p).output, tape.constant(r)));
  };
  GradCheckOptions opt;
  opt.step = 1e-6;
  for (const auto& l : p.gamma_heads) {
    const auto rep = finite_diff_check(params, loss, l.weight, opt);
    EXPECT_TRUE(rep.passed) << rep.parameter << " rel " << rep.max_rel_error;
  }
  for (const auto& l : p.beta_heads) {
    const auto rep = finite_diff_check(params, loss, l.weight, opt);
    EXPECT_TRUE(rep.passed) << rep.parameter << " rel " << rep.max_rel_error;
  }
}

TEST(Ltt, IdentityBankReturnsClampedInput) {
  Model<double> m = Model<double>::create(ModelConfig{});
  reset_to_identity_lut_path(m);
  Rng rng(4);
  const Tensord x = random_tensor<double>(Shape{2, 3, 8, 8}, rng, -0.3, 1.3);
  Tape<double> tape(&m.params);
  const auto out = ltt_forward(tape, tape.constant(x), m.arch.ltt);
  EXPECT_EQ(out.luts.shape(), (Shape{32, 3, 729, 1}));
  EXPECT_EQ(out.descriptors.shape(), (Shape{32, 6, 1, 1}));
  for (int64_t i = 0; i < x.numel(); ++i) ASSERT_NEAR(out.output.value()[i], std::clamp(x[i], 0.0, 1.0), 1e-12);
}

TEST(Ltt, ConstantImageGivesIdenticalLuts) {
  // Double precision: on a flat map instance norm divides rounding noise by sqrt(eps).
  Model<double> m = Model<double>::create(ModelConfig{});
  Tape<double> tape(&m.params);
  const auto out = ltt_forward(tape, tape.constant(Tensord(Shape{1, 3, 8, 8}, 0.37)), m.arch.ltt);
  const auto luts = extract_luts(out, m.arch.ltt);
  ASSERT_EQ(luts.size(), 16u);
  for (size_t i = 1; i < luts.size(); ++i) EXPECT_LT(max_abs_diff(luts[i].entries(), luts[0].entries()), 1e-6);
}

TEST(Ltt, BankGradientCheck) {
  Rng rng(5);
  ParameterSet<double> params;
  const LttParams p = make_ltt(params, rng, 4, 6, 2, 5, 3);
  const Tensord x = random_tensor<double>(Shape{1, 3, 8, 8}, rng, 0.05, 0.95);
  const Tensord r = random_tensor<double>(Shape{1, 3, 8, 8}, rng);
  LossFn<double> loss = [&](Tape<double>& tape) {
    return ops::sum(ops::mul(ltt_forward(tape, tape.constant(x), p).output, tape.constant(r)));
  };
  GradCheckOptions opt;
  opt.step = 1e-6;
  opt.samples = 64;
  for (ParamId id : {p.bank, p.predictor.weight, p.predictor.bias}) {
    const auto rep = finite_diff_check(params, loss, id, opt);
    EXPECT_TRUE(rep.passed) << rep.parameter << " rel " << rep.max_rel_error;
  }
}

TEST(Ide, ZeroRefinementIsPureUpsample) {
  Model<double> m = Model<double>::create(ModelConfig{});
  for (size_t i = 0; i < m.params.size(); ++i)
    if (starts_with(m.params.name(static_cast<ParamId>(i)), "ide")) m.params.value(static_cast<ParamId>(i)).fill(0.0);
  Rng rng(6);
  const Tensord x = random_tensor<double>(Shape{1, 3, 64, 64}, rng, 0, 1);
  Tape<double> tape(&m.params);
  const auto out = forward_pipeline(tape, tape.constant(x), m);
  EXPECT_EQ(out.output.shape(), (Shape{1, 3, 64, 64}));
  EXPECT_LT(max_abs_diff(out.output.value(), upsample8(tape, out.ltt.output.value())), 1e-12);
}

TEST(Ide, ShapeMismatchIsDimensionError) {
  Rng rng(7);
  ParameterSet<float> params;
  const IdeParams ide = make_ide(params, rng, 4, 0.1);
  const LdpParams ldp = make_ldp(params, rng, 4);
  Tape<float> tape(&params);
  const auto stack = ldp_forward(tape, tape.constant(Tensorf(Shape{1, 3, 32, 32})), ldp);
  EXPECT_THROW(ide_refine(tape, tape.constant(Tensorf(Shape{1, 3, 8, 8})), stack, ide), DimensionError);
}

TEST(Pipeline, IdentityLutPathOracle) {
  Model<double> m = Model<double>::create(ModelConfig{});
  reset_to_identity_lut_path(m);
  Rng rng(8);
  const Tensord x = random_tensor<double>(Shape{1, 3, 64, 64}, rng, 0, 1.5);
  Tape<double> tape(&m.params);
  const Tensord y = forward_pipeline(tape, tape.constant(x), m).output.value();
  Tensord low = ops::downsample_bilinear(tape.constant(x), 8).value();
  for (auto& v : low.values()) v = std::clamp(v, 0.0, 1.0);
  EXPECT_LT(max_abs_diff(y, upsample8(tape, low)), 1e-5);
}

TEST(Pipeline, OutputShapeMatchesInput) {
  const Model<float> m = Model<float>::create(small_config());
  Rng rng(9);
  for (auto [h, w] : {std::pair{64, 64}, std::pair{72, 40}, std::pair{13, 21}}) {
    const Tensorf y = run_model(m, random_tensor<float>(Shape{1, 3, h, w}, rng, 0, 1));
    EXPECT_EQ(y.shape(), (Shape{1, 3, h, w}));
    EXPECT_TRUE(y.all_finite());
  }
}

TEST(Pipeline, DefaultParameterCount) {
  const Model<float> m = Model<float>::create(ModelConfig{});
  EXPECT_EQ(m.params.count(), 198979);
  EXPECT_TRUE(m.params.find("ltt.bank").has_value());
}

TEST(Pipeline, OneAdamWStepReducesL1) {
  Model<float> m = Model<float>::create(ModelConfig{});
  Rng rng(10);
  const Tensorf x = random_tensor<float>(Shape{1, 3, 32, 32}, rng, 0, 1);
  Tensorf y = x;
  for (auto& v : y.values()) v = std::pow(v, 1 / 2.2f);
  auto l1 = [&](Tape<float>& tape) {
    return ops::mean(ops::abs(ops::sub(forward_pipeline(tape, tape.constant(x), m).output, tape.constant(y))));
  };
  OptimState<float> state(m.params, AdamWConfig{1e-4, 0.9, 0.99, 0.0, 1e-8});
  Tape<float> tape(&m.params);
  const Var<float> before = l1(tape);
  const float loss0 = before.value()[0];
  m.params.zero_grad();
  tape.backward(before);
  adamw_step(state, m.params);
  Tape<float> tape2(&m.params);
  EXPECT_LT(l1(tape2).value()[0], loss0);
}

TEST(Pipeline, NoDeadBranches) {
  Model<float> m = Model<float>::create(ModelConfig{});
  Rng rng(11);
  const Tensorf x = random_tensor<float>(Shape{2, 3, 32, 32}, rng, 0, 1);
  const Tensorf y = random_tensor<float>(Shape{2, 3, 32, 32}, rng, 0, 1);
  Tape<float> tape(&m.params);
  m.params.zero_grad();
  tape.backward(ops::mean(ops::abs(ops::sub(forward_pipeline(tape, tape.constant(x), m).output, tape.constant(y)))));
  int checked = 0;
  for (size_t i = 0; i < m.params.size(); ++i) {
    const auto id = static_cast<ParamId>(i);
    const std::string& name = m.params.name(id);
    if (!starts_with(name, "gtp") && !starts_with(name, "ltt") && !starts_with(name, "ide")) continue;
    ++checked;
    EXPECT_GT(max_abs(m.params.grad(id)), 0.0) << name;
  }
  EXPECT_GT(checked, 40);
}

TEST(Pipeline, FullGradientCheck) {
  ModelConfig cfg = small_config();
  cfg.residual_output_scale = 1.0;
  Model<double> m = Model<double>::create(cfg);
  Rng rng(12);
  const Tensord x = random_tensor<double>(Shape{1, 3, 16, 16}, rng, 0.05, 0.95);
  const Tensord r = random_tensor<double>(Shape{1, 3, 16, 16}, rng);
  LossFn<double> loss = [&](Tape<double>& tape) {
    return ops::sum(ops::mul(forward_pipeline(tape, tape.constant(x), m).output, tape.constant(r)));
  };
  GradCheckOptions opt;
  opt.step = 1e-5;
  opt.tolerance = 1e-6;
  opt.samples = 6;
  int checked = 0;
  for (const auto& rep : finite_diff_check_all(m.params, loss, opt)) {
    EXPECT_TRUE(rep.passed) << rep.parameter << " rel " << rep.max_rel_error << " checked " << rep.checked;
    checked += rep.checked;
  }
  EXPECT_GT(checked, 300);
}

TEST(Pipeline, FloatGradientsMatchDoubleDifferences) {
  ModelConfig cfg = small_config();
  cfg.residual_output_scale = 1.0;
  Model<float> m = Model<float>::create(cfg);
  const Model<double> m64 = m.cast<double>();
  Rng rng(13);
  const Tensord x = random_tensor<double>(Shape{1, 3, 16, 16}, rng, 0.05, 0.95);
  const Tensord r = random_tensor<double>(Shape{1, 3, 16, 16}, rng);
  const Tensorf xf = x.cast<float>(), rf = r.cast<float>();
  LossFn<float> loss = [&](Tape<float>& tape) {
    return ops::sum(ops::mul(forward_pipeline(tape, tape.constant(xf), m).output, tape.constant(rf)));
  };
  LossFn<double> reference = [&](Tape<double>& tape) {
    return ops::sum(ops::mul(forward_pipeline(tape, tape.constant(x), m64).output, tape.constant(r)));
  };
  GradCheckOptions opt;
  opt.step = 1e-5;
  opt.samples = 4;
  for (const auto& rep : mixed_precision_check_all(m.params, loss, reference, opt))
    EXPECT_TRUE(rep.passed) << rep.parameter << " rel " << rep.max_rel_error;

  // A wrong gradient is caught: scale the float loss but not the reference.
  LossFn<float> scaled = [&](Tape<float>& tape) { return ops::mul_scalar(loss(tape), 1.01f); };
  const auto reps = mixed_precision_check_all(m.params, scaled, reference, opt);
  EXPECT_FALSE(reps.front().passed);
  EXPECT_NEAR(reps.front().max_rel_error, 0.01 / 1.01, 2e-3);
}
