#include <benchmark/benchmark.h>

#include "crahn/rng.hpp"
#include "crahn/simulator.hpp"

using namespace crahn;

static void BM_ScheduleAndDrain(benchmark::State& state) {
  const auto n = state.range(0);
  RngStream rng(1, "bench/queue");
  for (auto _ : state) {
    Simulator sim;
    std::int64_t fired = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      sim.schedule(SimTime::from_ms(static_cast<std::int64_t>(rng.below(1'000'000))),
                   [&fired] { ++fired; });
    }
    sim.run_until(SimTime::from_ms(1'000'000));
    benchmark::DoNotOptimize(fired);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ScheduleAndDrain)->Range(1 << 10, 1 << 17);

static void BM_SelfRescheduling(benchmark::State& state) {
  for (auto _ : state) {
    Simulator sim;
    std::function<void()> tick = [&] { sim.schedule_in(SimTime::from_ms(100), tick); };
    sim.schedule(SimTime{}, tick);
    benchmark::DoNotOptimize(sim.run_until(seconds(10'000)));
  }
  state.SetItemsProcessed(state.iterations() * 100'001);
}
BENCHMARK(BM_SelfRescheduling);

static void BM_RngUniform(benchmark::State& state) {
  RngStream rng(1, "bench/rng");
  for (auto _ : state) benchmark::DoNotOptimize(rng.uniform01());
}
BENCHMARK(BM_RngUniform);
BENCHMARK_MAIN();
