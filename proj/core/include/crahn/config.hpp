#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace crahn {

struct TrainConfig {
  double learning_rate = 0.5;
  int max_epochs = 20000;
  double target_mse = 0.05;
  double init_scale = 0.5;
};

/// Which protocol subsystems a run drives.
struct ScenarioToggles {
  bool detection = true;
  bool spectrum = true;
  bool discovery = true;
  bool response = true;
  bool situation = true;

  bool any() const { return detection || spectrum || discovery || response || situation; }
};

inline constexpr int kSensorKinds = 5;
using Signature = std::array<double, kSensorKinds>;

struct DetectionParams {
  int n_groups = 5;
  int n_hidden = 5;
  int sensors_per_kind = 4;
  double noise_sigma = 0.05;
  int samples_per_class = 100;
  double snapshot_interval_s = 1.0;
  int num_events = 10;
  double event_duration_s = 20.0;
  // Canonical sensor order: smoke, seismic, radar, temperature, weather.
  Signature sig_none{0.1, 0.1, 0.1, 0.3, 0.2};
  Signature sig_fire{0.9, 0.1, 0.1, 0.8, 0.3};
  Signature sig_earthquake{0.2, 0.9, 0.2, 0.3, 0.2};
  Signature sig_flood{0.1, 0.2, 0.9, 0.3, 0.8};
  TrainConfig train{};
  std::string model_path;  // empty: train at start of run
};

struct SpectrumParams {
  double sensing_interval_s = 0.1;
  double pu_period_s = 5.0;
  double pu_on_fraction = 0.4;
  double retune_delay_s = 0.05;
  double window_s = 60.0;
  double p_miss = 0.0;
  double p_false = 0.0;
  std::string selector = "ann";  // "ann" | "heuristic"
  double warmup_s = 180.0;
  int warmup_trace_nodes = 5;
  double trainset_stride_s = 5.0;
  double horizon_s = 5.0;
  int n_hidden = 5;
  TrainConfig train{0.5, 3000, 0.002, 0.5};
};

struct NetParams {
  double v_min = 1.0;
  double v_max = 5.0;
  double pause_s = 2.0;
  double hop_delay_s = 0.01;
  double jitter_max_s = 0.05;
  double advert_period_s = 5.0;
  double cache_ttl_s = 15.0;
  double route_ttl_s = 15.0;
  int ttl_hops = 10;
  double discovery_timeout_s = 10.0;
  int discovery_retries = 1;
  std::vector<std::string> services{"gateway",  "medical", "shelter",  "water",     "fire-brigade",
                                    "locator",  "gas-monitor", "food", "transport", "power"};
  int providers_per_service = 1;
  double discovery_interval_s = 30.0;
  double situation_period_s = 120.0;
};

struct ResponseParams {
  int levels = 3;
  double respond_prob = 0.6;
  double response_delay_min_s = 1.0;
  double response_delay_max_s = 5.0;
  double level_wait_s = 10.0;
  double gateway_retry_s = 5.0;
  int site_node = 0;
};

struct ScenarioConfig {
  double area_width_m = 1000.0;
  double area_height_m = 1000.0;
  int num_pu = 5;
  int num_su = 50;
  int num_channels = 10;
  std::string band_label = "2.4GHz";
  double radio_range_m = 250.0;
  double sim_duration_s = 600.0;
  std::uint64_t master_seed = 1;

  ScenarioToggles scenarios{};
  DetectionParams detection{};
  SpectrumParams spectrum{};
  NetParams net{};
  ResponseParams response{};
};

/// Parses a JSON scenario document. Absent fields keep their defaults;
/// unknown fields are rejected. Throws ConfigParse or ConfigInvalid.
ScenarioConfig load_config(std::string_view json_text);

/// Reads and parses a config file. Throws IoError if it cannot be read.
ScenarioConfig load_config_file(const std::string& path);

/// Throws ConfigInvalid naming the first offending field.
void validate(const ScenarioConfig& cfg);

/// Copy of cfg with one numeric field, named by dotted path such as
/// "detection.n_groups", replaced and the result validated.
ScenarioConfig with_override(const ScenarioConfig& cfg, std::string_view path, double value);

/// Fully resolved config as a canonical JSON document.
std::string to_json(const ScenarioConfig& cfg);

/// FNV-1a digest of the canonical JSON, as 16 hex digits.
std::string config_digest(const ScenarioConfig& cfg);

}  // namespace crahn
