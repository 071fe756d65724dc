#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crahn/config.hpp"
#include "crahn/detection.hpp"
#include "crahn/discovery.hpp"
#include "crahn/mlp.hpp"
#include "crahn/response.hpp"
#include "crahn/situation.hpp"
#include "crahn/spectrum.hpp"

namespace crahn {

struct SituationSpread {
  NodeId origin = 0;
  SituationRecord record;
  int holders = 0;  // stores holding the record at the end of the run
};

/// Everything one simulation run produced, before it is written to disk.
struct RunResult {
  ScenarioConfig config;

  std::vector<std::vector<std::string>> hosted;  // services per node
  std::vector<NodeId> call_tree;

  // Offline phase.
  std::optional<Mlp> detector;
  std::vector<double> detector_mse_history;
  std::optional<Mlp> spectrum_manager;
  std::vector<double> spectrum_mse_history;
  std::size_t spectrum_trainset_size = 0;

  // Ledgers.
  std::vector<GroundTruthEvent> truth;
  std::vector<DisasterVerdict> verdicts;
  std::vector<SwitchRecord> switches;
  std::vector<DiscoveryOutcome> discoveries;
  std::vector<ResponseOutcome> responses;
  std::size_t responses_pending = 0;
  std::vector<SituationSpread> situations;

  // Protocol counters.
  std::map<std::string, std::uint64_t> drops;
  std::uint64_t max_flood_forwards = 0;
  std::uint64_t ttl_violations = 0;
  std::uint64_t tx_violations = 0;
  std::uint64_t tx_checks = 0;
  std::uint64_t spectrum_deferrals = 0;
  std::uint64_t spectrum_vacates = 0;
  std::size_t spectrum_pending = 0;  // vacated, not yet resumed at the end
  std::uint64_t events_processed = 0;
};

/// Places `providers_per_service` distinct hosts per service.
std::vector<std::vector<std::string>> assign_services(const ScenarioConfig& cfg,
                                                      std::uint64_t seed);

/// Trains the spectrum manager from a warm-up run: occupancy traces of a few
/// nodes with their own mobility, turned into next-horizon idle-fraction
/// targets.
TrainResult train_spectrum_manager(const ScenarioConfig& cfg,
                                   const std::vector<PrimaryUser>& pus, std::uint64_t seed,
                                   std::size_t* trainset_size = nullptr);

/// One full deterministic run: offline training, then the main event loop.
RunResult run_simulation(const ScenarioConfig& cfg);

}  // namespace crahn
