#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "uncage/fusion.hpp"
#include "uncage/gabor.hpp"
#include "uncage/imaging.hpp"
#include "uncage/inpaint.hpp"
#include "uncage/rng.hpp"

using namespace uncage;

namespace {

ScalarMap test_gray(int w, int h) {
  ScalarMap img(w, h);
  Xorshift64Star rng(123);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.at(x, y) =
          0.5 + 0.3 * std::sin(2.0 * std::numbers::pi * x / 7.0) +
          0.1 * rng.next_double();
  return img;
}

RasterImage test_rgb(int w, int h) {
  RasterImage img(w, h, 3);
  Xorshift64Star rng(321);
  for (double& v : img.data()) v = rng.next_double();
  return img;
}

void BM_GaborBankBatched(benchmark::State& state) {
  const ScalarMap img = test_gray(256, 144);
  const GaborParams params;
  for (auto _ : state)
    benchmark::DoNotOptimize(bank_response(img, params));
}
BENCHMARK(BM_GaborBankBatched)->Unit(benchmark::kMillisecond);

void BM_GaborBankReference(benchmark::State& state) {
  const ScalarMap img = test_gray(256, 144);
  const GaborParams params;
  for (auto _ : state)
    benchmark::DoNotOptimize(bank_response_reference(img, params));
}
BENCHMARK(BM_GaborBankReference)->Unit(benchmark::kMillisecond);

void BM_Inpaint(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const RasterImage img = test_rgb(side, side);
  BinaryMask mask(side, side);
  for (int y = side / 2 - side / 8; y < side / 2 + side / 8; ++y)
    for (int x = side / 2 - side / 8; x < side / 2 + side / 8; ++x)
      mask.set(x, y, true);
  const InpaintParams params;
  for (auto _ : state)
    benchmark::DoNotOptimize(inpaint(img, mask, params));
}
BENCHMARK(BM_Inpaint)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ResizeBilinear(benchmark::State& state) {
  const RasterImage img = test_rgb(640, 480);
  for (auto _ : state)
    benchmark::DoNotOptimize(resize_bilinear(img, 512, 288));
}
BENCHMARK(BM_ResizeBilinear)->Unit(benchmark::kMillisecond);

void BM_Dilate(benchmark::State& state) {
  BinaryMask mask(512, 288);
  Xorshift64Star rng(99);
  for (auto& v : mask.data()) v = rng.next_below(20) == 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(dilate(mask, 3, 1));
}
BENCHMARK(BM_Dilate)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
