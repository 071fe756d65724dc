#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "crahn/config.hpp"
#include "crahn/detection.hpp"
#include "crahn/scenario.hpp"

namespace crahn {

struct NodeLatencyStats {
  int issued = 0;
  int found = 0;
  double mean_latency_s = 0.0;  // over found lookups
};

/// Aggregates of one run. Every mean is recomputable from the ledger CSVs
/// written next to report.csv.
struct RunReport {
  std::string config_digest;
  std::uint64_t seed = 0;

  double false_negative_rate = 0.0;
  double false_positive_rate = 0.0;

  double mean_switch_time_s = 0.0;
  std::map<int, SwitchStats> switch_stats;

  double mean_discovery_latency_s = 0.0;  // over successful lookups
  double discovery_success_rate = 0.0;
  std::map<NodeId, NodeLatencyStats> latency_stats;

  std::map<std::string, std::uint64_t> drops;

  /// Numeric metrics in report order, without digest and seed.
  std::vector<std::pair<std::string, double>> metrics;

  double metric(const std::string& name) const;
};

RunReport summarize(const RunResult& run);

/// Writes the resolved config, report.csv, and every ledger CSV into out_dir
/// (created if needed). Throws IoError.
void write_run(const RunResult& run, const RunReport& report, const std::filesystem::path& out_dir);

/// Simulates cfg and writes the run directory.
RunReport run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir);

struct SweepSpec {
  std::string parameter;  // dotted config path, e.g. "detection.n_groups"
  std::vector<double> values;
  int repeats = 1;
  ScenarioConfig base;

  /// Throws ConfigInvalid on an empty value list or repeats < 1.
  void validate() const;
};

struct SweepRow {
  double value = 0.0;
  int repeat = 0;
  std::uint64_t seed = 0;
  RunReport report;
};

/// Runs every value x repeat in its own directory under out_dir/runs, then
/// writes sweep.csv and sweep_summary.csv. Repeat r uses the same seed for
/// every value. Runs may proceed on up to `jobs` threads; output does not
/// depend on the job count.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir,
                                int jobs = 1);

struct DetectorTraining {
  Mlp net;
  std::vector<double> mse_history;
  DetectorEvaluation heldout;
};

/// Trains a detector, writes the model JSON to model_path and the
/// (epoch, mse) curve to report_path. Throws IoError.
DetectorTraining train_detector(const DetectionParams& params, std::uint64_t seed,
                                const std::filesystem::path& model_path,
                                const std::filesystem::path& report_path);

std::string format_number(double v);

}  // namespace crahn
