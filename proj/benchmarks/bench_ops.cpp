#include <benchmark/benchmark.h>

#include "tonemap/lut.hpp"
#include "tonemap/ops.hpp"
#include "tonemap/pyramid.hpp"
#include "tonemap/rng.hpp"

using namespace tonemap;

namespace {

Tensorf random_image(Shape s, uint64_t seed) {
  Rng rng(seed);
  Tensorf t(s);
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform());
  return t;
}

void BM_Conv2dForward(benchmark::State& state) {
  const int64_t side = state.range(0), ch = state.range(1);
  const Tensorf x = random_image(Shape{1, ch, side, side}, 1);
  const Tensorf w = random_image(Shape{ch, ch, 3, 3}, 2);
  const Tensorf b(Shape{1, ch, 1, 1});
  for (auto _ : state) {
    Tape<float> tape;
    benchmark::DoNotOptimize(ops::conv2d(tape.constant(x), tape.constant(w), tape.constant(b), {1, 1, ops::Padding::kReflect}).value().data());
  }
  state.SetItemsProcessed(state.iterations() * side * side * ch * ch * 9);
}
BENCHMARK(BM_Conv2dForward)->Args({64, 20})->Args({128, 20})->Args({256, 16});

void BM_Conv2dBackward(benchmark::State& state) {
  const int64_t side = state.range(0), ch = 20;
  ParameterSet<float> params;
  const ParamId w = params.add("w", random_image(Shape{ch, ch, 3, 3}, 2));
  const ParamId b = params.add("b", Tensorf(Shape{1, ch, 1, 1}));
  const Tensorf x = random_image(Shape{1, ch, side, side}, 1);
  for (auto _ : state) {
    Tape<float> tape(&params);
    auto y = ops::conv2d(tape.constant(x), tape.param(w), tape.param(b), {1, 1, ops::Padding::kReflect});
    tape.backward(ops::sum(y));
    benchmark::DoNotOptimize(params.grad(w).data());
  }
}
BENCHMARK(BM_Conv2dBackward)->Arg(64)->Arg(128);

void BM_ApplyLut(benchmark::State& state) {
  const int64_t side = state.range(0);
  const Tensorf img = random_image(Shape{1, 3, side, side}, 3);
  Lut3D<float> lut(9);
  Rng rng(4);
  for (auto& v : lut.entries().values()) v = static_cast<float>(rng.uniform());
  for (auto _ : state) benchmark::DoNotOptimize(apply_lut(img, lut).data());
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_ApplyLut)->Arg(256)->Arg(1024);

void BM_ApplyLutsBlended(benchmark::State& state) {
  const int64_t side = state.range(0);
  const int grid = 4;
  const Tensorf img = random_image(Shape{1, 3, side, side}, 5);
  const Tensorf luts = random_image(Shape{grid * grid, 3, 729, 1}, 6);
  for (auto _ : state) {
    Tape<float> tape;
    benchmark::DoNotOptimize(ops::apply_luts_blended(tape.constant(img), tape.constant(luts), grid).value().data());
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_ApplyLutsBlended)->Arg(256)->Arg(1024);

void BM_LaplacianRoundTrip(benchmark::State& state) {
  const int64_t side = state.range(0);
  const Tensorf img = random_image(Shape{1, 3, side, side}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(pyramid::laplacian_collapse(pyramid::laplacian_decompose(img, 4)).data());
}
BENCHMARK(BM_LaplacianRoundTrip)->Arg(64)->Arg(512);

}  // namespace
