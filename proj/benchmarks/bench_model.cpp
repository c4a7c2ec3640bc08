#include <benchmark/benchmark.h>

#include "tonemap/normalize.hpp"
#include "tonemap/synthetic.hpp"
#include "tonemap/trainer.hpp"

using namespace tonemap;

namespace {

void BM_ForwardPipeline(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Model<float> model = Model<float>::create(ModelConfig{});
  const Tensorf x = normalize_hdr(synthetic_hdr_scene(side, side, 1)).image;
  for (auto _ : state) benchmark::DoNotOptimize(run_model(model, x).data());
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_ForwardPipeline)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  TrainConfig cfg;
  cfg.batch_size = static_cast<int>(state.range(0));
  const Tensorf one = normalize_hdr(synthetic_hdr_scene(cfg.crop_size, cfg.crop_size, 2)).image;
  Batch batch;
  batch.x = Tensorf(Shape{cfg.batch_size, 3, cfg.crop_size, cfg.crop_size});
  for (int i = 0; i < cfg.batch_size; ++i) std::copy_n(one.data(), one.numel(), batch.x.plane(i, 0));
  batch.y = apply_tone_operator(batch.x, ToneOperator::kGamma);
  Model<float> model = Model<float>::create(cfg.model);
  OptimState<float> optim(model.params, cfg.adamw());
  AnalyticFeatureExtractor<float> extractor;
  int64_t step = 0;
  for (auto _ : state) benchmark::DoNotOptimize(train_step(model, optim, batch, cfg, step++, extractor).loss);
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
