#pragma once

#include <array>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "crahn/config.hpp"
#include "crahn/mlp.hpp"
#include "crahn/rng.hpp"
#include "crahn/sim_time.hpp"
#include "crahn/simulator.hpp"

namespace crahn {

enum class SensorKind { Smoke = 0, Seismic, Radar, Temperature, Weather };

struct SensorReading {
  int sensor_id = 0;
  SensorKind kind = SensorKind::Smoke;
  double value = 0.0;  // normalized to [0,1]
  SimTime at;
};

struct ContextSnapshot {
  int site_id = 0;
  std::vector<double> groups;
  SimTime at;
};

enum class DisasterClass { None = 0, Fire, Earthquake, Flood };
inline constexpr int kNumClasses = 4;

std::string_view to_string(DisasterClass c);

struct DisasterVerdict {
  DisasterClass cls = DisasterClass::None;
  std::array<double, kNumClasses> scores{};
  SimTime at;
};

struct GroundTruthEvent {
  DisasterClass cls = DisasterClass::Fire;
  SimTime start;
  SimTime duration;

  bool covers(SimTime t) const { return t >= start && t <= start + duration; }
};

/// Synthetic sensor field: per-class mean signatures over the five sensor
/// kinds, several sensors per kind, Gaussian noise clipped to [0,1].
struct GeneratorConfig {
  std::array<Signature, kNumClasses> signatures;
  int sensors_per_kind = 4;
  double noise_sigma = 0.05;
  int samples_per_class = 100;
  int n_groups = 5;

  static GeneratorConfig from(const DetectionParams& p);
  int sensor_count() const { return sensors_per_kind * kSensorKinds; }
};

/// Sorts readings by sensor_id and averages them in n contiguous groups whose
/// sizes differ by at most one (larger groups first). Throws TooFewReadings.
ContextSnapshot aggregate(std::vector<SensorReading> readings, int n, int site_id = 0,
                          SimTime at = {});

/// One reading per sensor; sensor ids run kind-major (all smoke sensors first).
std::vector<SensorReading> sample_readings(const GeneratorConfig& gen, DisasterClass cls,
                                           SimTime at, RngStream& rng);

/// samples_per_class x 4 labeled snapshots with one-hot targets, classes
/// interleaved in enum order.
Dataset synth_dataset(const GeneratorConfig& gen, RngStream& rng);

/// Index of the largest score; ties go to the lowest index, which puts None
/// first.
DisasterClass argmax_class(std::span<const double> scores);

/// Throws DimensionMismatch if the snapshot does not match the detector.
DisasterVerdict classify(const Mlp& detector, const ContextSnapshot& ctx);

/// Fraction of truth events with no non-None verdict inside [start, start+duration].
double false_negative_rate(std::span<const GroundTruthEvent> truth,
                           std::span<const DisasterVerdict> verdicts);

/// Fraction of verdicts outside every event window that still raise an alarm.
double false_positive_rate(std::span<const GroundTruthEvent> truth,
                           std::span<const DisasterVerdict> verdicts);

/// Non-overlapping disaster windows, one per equal slot of [0, horizon).
std::vector<GroundTruthEvent> schedule_events(int count, SimTime duration, SimTime horizon,
                                              RngStream& rng);

struct DetectorEvaluation {
  int samples = 0;
  double accuracy = 0.0;
  double false_negative_rate = 0.0;  // disaster samples classified None
  double false_positive_rate = 0.0;  // None samples classified as a disaster
};

/// Scores the detector on a freshly synthesized labeled set.
DetectorEvaluation evaluate_detector(const Mlp& detector, const GeneratorConfig& gen,
                                     RngStream& rng);

/// Trains a fresh n_groups-hidden-4 detector on a synthesized dataset.
TrainResult train_detector_model(const DetectionParams& params, std::uint64_t seed);

/// Context manager for one site: every snapshot interval it samples the
/// sensor field (driven by the ground-truth schedule), aggregates, and
/// classifies.
class DetectionSite {
 public:
  using VerdictSink = std::function<void(const DisasterVerdict&)>;

  DetectionSite(Simulator& sim, Mlp detector, GeneratorConfig gen, SimTime interval,
                std::vector<GroundTruthEvent> truth, RngStream rng, int site_id = 0);

  /// Schedules the first snapshot at `interval`.
  void start(SimTime until);
  void on_verdict(VerdictSink sink) { sink_ = std::move(sink); }

  const std::vector<DisasterVerdict>& verdicts() const { return verdicts_; }
  const std::vector<GroundTruthEvent>& truth() const { return truth_; }
  DisasterClass truth_at(SimTime t) const;

 private:
  void snapshot(SimTime until);

  Simulator& sim_;
  Mlp detector_;
  GeneratorConfig gen_;
  SimTime interval_;
  std::vector<GroundTruthEvent> truth_;
  RngStream rng_;
  int site_id_;
  std::vector<DisasterVerdict> verdicts_;
  VerdictSink sink_;
};

}  // namespace crahn
