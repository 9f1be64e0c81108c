#include "fastmath.hpp"

#include "inrc/bundle.hpp"
#include "inrc/synth.hpp"
#include "inrc/trainer.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

namespace {

using namespace inrc;

NetworkArch arch(int l, int n) {
  NetworkArch a;
  a.hidden_layers = l;
  a.neurons = n;
  return a;
}

// range(0) = image side, range(1) = width n, depth fixed at l = 4.
void BM_Forward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const WeightSet w = init_weights(arch(4, static_cast<int>(state.range(1))), 1);
  const CoordGrid grid = coord_grid(side, side);
  for (auto _ : state) benchmark::DoNotOptimize(forward(w, grid));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_Forward)->Args({32, 18})->Args({64, 64})->Args({128, 64})->Unit(benchmark::kMicrosecond);

void BM_LossAndGrad(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const WeightSet w = init_weights(arch(4, static_cast<int>(state.range(1))), 1);
  const TrainingSet set = TrainingSet::from_images({synth::gaussian_blobs(side, side, 3, 1)});
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(w, set.coords.points, set.targets[0]));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_LossAndGrad)->Args({32, 18})->Args({64, 64})->Args({128, 64})->Unit(benchmark::kMicrosecond);

// One joint epoch with N = 2 over M images of 32x32.
void BM_TrainStep(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  std::vector<ImageTensor> imgs;
  for (int i = 0; i < m; ++i) imgs.push_back(synth::gaussian_blobs(32, 32, 3, static_cast<std::uint64_t>(i)));
  const TrainingSet set = TrainingSet::from_images(imgs);
  TrainConfig cfg;
  ThetaBank bank = initial_bank(arch(4, 18), 2, cfg);
  OptimizerState opt(cfg, bank);
  const CombinerSpec spec = default_combiner(2, m);
  int epoch = 0;
  for (auto _ : state) benchmark::DoNotOptimize(train_step(bank, spec, set, opt, epoch++));
}
BENCHMARK(BM_TrainStep)->Arg(3)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_SinCos(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n), s(n), c(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = -40.0 + 80.0 * static_cast<double>(i) / static_cast<double>(n);
  for (auto _ : state) {
    detail::sincos_array(x.data(), s.data(), c.data(), n);
    benchmark::DoNotOptimize(s.data());
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_SinCos)->Arg(1 << 12)->Arg(1 << 18);

void BM_LibmSinCos(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n), s(n), c(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = -40.0 + 80.0 * static_cast<double>(i) / static_cast<double>(n);
  for (auto _ : state) {
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::sin(x[i]);
      c[i] = std::cos(x[i]);
    }
    benchmark::DoNotOptimize(s.data());
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_LibmSinCos)->Arg(1 << 12)->Arg(1 << 18);

void BM_SerializeRoundTrip(benchmark::State& state) {
  const NetworkArch a = arch(4, 170);
  const ThetaBank bank({init_weights(a, 1), init_weights(a, 2)});
  const CombinerSpec spec = default_combiner(2, 6);
  for (auto _ : state) {
    const auto bytes = serialize(bank, spec, a, ImageDims{512, 768, 3});
    benchmark::DoNotOptimize(deserialize(bytes));
  }
}
BENCHMARK(BM_SerializeRoundTrip)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
