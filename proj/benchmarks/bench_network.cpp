#include <benchmark/benchmark.h>

#include "crahn/discovery.hpp"
#include "crahn/network.hpp"
#include "crahn/scenario.hpp"

using namespace crahn;

static void BM_DiscoveryFlood(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  RngStream place(1, "bench/place");
  std::vector<Vec2> at;
  for (int i = 0; i < n; ++i) at.push_back({place.uniform(0, 1000), place.uniform(0, 1000)});
  for (auto _ : state) {
    Simulator sim;
    std::vector<RandomWaypoint> nodes;
    for (const auto& p : at) nodes.push_back(RandomWaypoint::stationary(p));
    Network net(sim, std::move(nodes), LinkParams{}, RngStream(1, "bench/link"));
    std::vector<std::vector<std::string>> hosted(n);
    ServiceDiscovery disc(net, DiscoveryParams{}, hosted);
    disc.discover(0, "absent");
    sim.run_until(seconds(30));
    benchmark::DoNotOptimize(disc.flood_audit().max_forwards());
  }
}
BENCHMARK(BM_DiscoveryFlood)->Arg(25)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

static void BM_SmallScenario(benchmark::State& state) {
  ScenarioConfig cfg;
  cfg.sim_duration_s = 120;
  cfg.num_su = 20;
  cfg.detection.num_events = 2;
  cfg.spectrum.selector = "heuristic";
  for (auto _ : state) benchmark::DoNotOptimize(run_simulation(cfg).events_processed);
}
BENCHMARK(BM_SmallScenario)->Unit(benchmark::kMillisecond);
