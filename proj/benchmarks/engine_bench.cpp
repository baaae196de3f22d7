// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "geoae/analysis.hpp"
#include "geoae/disk_data.hpp"
#include "geoae/ops.hpp"
#include "geoae/training.hpp"

namespace {

using namespace geoae;

Tensor random_batch(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor t(shape);
  for (double& v : t.data()) v = u(rng);
  return t;
}

void BM_ConvForwardFirstLayer(benchmark::State& state) {
  const Tensor x = random_batch({20, 1, 64, 64}, 1);
  ConvParams p = ConvParams::zeros(2, 1, 8, true);
  for (double& w : p.weights.data()) w = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(conv_forward(x, p, 2, 1));
}
BENCHMARK(BM_ConvForwardFirstLayer);

void BM_ConvBackwardFirstLayer(benchmark::State& state) {
  const Tensor x = random_batch({20, 1, 64, 64}, 1);
  const Tensor g = random_batch({20, 8, 32, 32}, 2);
  ConvParams p = ConvParams::zeros(2, 1, 8, true);
  for (auto _ : state) benchmark::DoNotOptimize(conv_backward(g, x, p, 2, 1));
}
BENCHMARK(BM_ConvBackwardFirstLayer);

void BM_UpsampleConvForwardLastLayer(benchmark::State& state) {
  const Tensor x = random_batch({20, 8, 32, 32}, 3);
  ConvParams p = ConvParams::zeros(2, 8, 1, true);
  for (auto _ : state) benchmark::DoNotOptimize(upsample_conv_forward(x, p));
}
BENCHMARK(BM_UpsampleConvForwardLastLayer);

void BM_UpsampleConvBackwardLastLayer(benchmark::State& state) {
  const Tensor x = random_batch({20, 8, 32, 32}, 3);
  const Tensor g = random_batch({20, 1, 64, 64}, 4);
  ConvParams p = ConvParams::zeros(2, 8, 1, true);
  for (auto _ : state) benchmark::DoNotOptimize(upsample_conv_backward(g, x, p));
}
BENCHMARK(BM_UpsampleConvBackwardLastLayer);

// One gradient chunk of the disk autoencoder (20 images).
void BM_AutoencoderChunkGradient(benchmark::State& state) {
  TrainConfig cfg;
  std::vector<Network> chain = build_disk_autoencoder(cfg);
  const Tensor x = random_batch({20, 1, 64, 64}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(chain_loss_and_grad(chain, x, x, true));
  state.SetItemsProcessed(state.iterations() * 20);
}
BENCHMARK(BM_AutoencoderChunkGradient);

void BM_RenderDiskMc(benchmark::State& state) {
  const double r = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(render_disk_mc(r, 64, 1.0, 4096, 7));
}
BENCHMARK(BM_RenderDiskMc)->Arg(4)->Arg(16)->Arg(30);

void BM_RenderDiskOracle(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(render_disk_oracle(16.0, 64, 1.0));
}
BENCHMARK(BM_RenderDiskOracle);

void BM_MaximizeJ(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(maximize_J(32.0, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_MaximizeJ)->Arg(256)->Arg(1024);

void BM_AiryProfile(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(airy_profile(32.0, 256));
}
BENCHMARK(BM_AiryProfile);

}  // namespace

BENCHMARK_MAIN();
