#include <benchmark/benchmark.h>

#include "crahn/detection.hpp"
#include "crahn/mlp.hpp"

using namespace crahn;

static void BM_Forward(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  RngStream rng(1, "bench/forward");
  const Mlp net = Mlp::random(5, hidden, 4, rng, 0.5);
  const std::vector<double> x{0.1, 0.4, 0.9, 0.3, 0.7};
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, x));
}
BENCHMARK(BM_Forward)->Arg(5)->Arg(20)->Arg(80);

static void BM_Gradient(benchmark::State& state) {
  RngStream rng(1, "bench/gradient");
  const Mlp net = Mlp::random(5, 20, 4, rng, 0.5);
  const Sample s{{0.1, 0.4, 0.9, 0.3, 0.7}, {0, 1, 0, 0}};
  for (auto _ : state) benchmark::DoNotOptimize(gradient(net, s));
}
BENCHMARK(BM_Gradient);

static void BM_TrainDetector(benchmark::State& state) {
  DetectionParams params;
  params.n_groups = static_cast<int>(state.range(0));
  params.train.max_epochs = 200;
  params.train.target_mse = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(train_detector_model(params, 1));
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_TrainDetector)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);
