#include "crahn/detection.hpp"

#include <algorithm>

#include "crahn/error.hpp"

namespace crahn {

std::string_view to_string(DisasterClass c) {
  switch (c) {
    case DisasterClass::None: return "none";
    case DisasterClass::Fire: return "fire";
    case DisasterClass::Earthquake: return "earthquake";
    case DisasterClass::Flood: return "flood";
  }
  return "none";
}

GeneratorConfig GeneratorConfig::from(const DetectionParams& p) {
  GeneratorConfig g;
  g.signatures = {p.sig_none, p.sig_fire, p.sig_earthquake, p.sig_flood};
  g.sensors_per_kind = p.sensors_per_kind;
  g.noise_sigma = p.noise_sigma;
  g.samples_per_class = p.samples_per_class;
  g.n_groups = p.n_groups;
  return g;
}

ContextSnapshot aggregate(std::vector<SensorReading> readings, int n, int site_id, SimTime at) {
  if (n < 1 || readings.size() < static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::TooFewReadings, std::to_string(readings.size()) +
                                               " readings cannot fill " + std::to_string(n) +
                                               " groups");
  }
  std::stable_sort(readings.begin(), readings.end(),
                   [](const SensorReading& a, const SensorReading& b) {
                     return a.sensor_id < b.sensor_id;
                   });
  const std::size_t base = readings.size() / n;
  const std::size_t extra = readings.size() % n;
  ContextSnapshot snap{site_id, std::vector<double>(n), at};
  std::size_t pos = 0;
  for (int g = 0; g < n; ++g) {
    const std::size_t size = base + (static_cast<std::size_t>(g) < extra ? 1 : 0);
    double sum = 0.0;
    for (std::size_t k = 0; k < size; ++k) sum += readings[pos + k].value;
    snap.groups[g] = sum / static_cast<double>(size);
    pos += size;
  }
  return snap;
}

std::vector<SensorReading> sample_readings(const GeneratorConfig& gen, DisasterClass cls,
                                           SimTime at, RngStream& rng) {
  const Signature& sig = gen.signatures[static_cast<int>(cls)];
  std::vector<SensorReading> out;
  out.reserve(gen.sensor_count());
  for (int kind = 0; kind < kSensorKinds; ++kind) {
    for (int k = 0; k < gen.sensors_per_kind; ++k) {
      double v = sig[kind];
      if (gen.noise_sigma > 0.0) v = std::clamp(rng.normal(v, gen.noise_sigma), 0.0, 1.0);
      out.push_back(SensorReading{kind * gen.sensors_per_kind + k, static_cast<SensorKind>(kind),
                                  v, at});
    }
  }
  return out;
}

Dataset synth_dataset(const GeneratorConfig& gen, RngStream& rng) {
  Dataset data;
  data.reserve(static_cast<std::size_t>(gen.samples_per_class) * kNumClasses);
  for (int i = 0; i < gen.samples_per_class; ++i) {
    for (int c = 0; c < kNumClasses; ++c) {
      const auto cls = static_cast<DisasterClass>(c);
      auto snap = aggregate(sample_readings(gen, cls, SimTime{}, rng), gen.n_groups);
      std::vector<double> target(kNumClasses, 0.0);
      target[c] = 1.0;
      data.push_back(Sample{std::move(snap.groups), std::move(target)});
    }
  }
  return data;
}

DisasterClass argmax_class(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return static_cast<DisasterClass>(best);
}

DisasterVerdict classify(const Mlp& detector, const ContextSnapshot& ctx) {
  if (detector.n_out != kNumClasses) {
    throw Error(ErrorCode::DimensionMismatch, "detector must have 4 outputs");
  }
  const auto y = forward(detector, ctx.groups);
  DisasterVerdict v;
  std::copy(y.begin(), y.end(), v.scores.begin());
  v.cls = argmax_class(y);
  v.at = ctx.at;
  return v;
}

double false_negative_rate(std::span<const GroundTruthEvent> truth,
                           std::span<const DisasterVerdict> verdicts) {
  if (truth.empty()) return 0.0;
  std::size_t missed = 0;
  for (const auto& ev : truth) {
    const bool hit = std::any_of(verdicts.begin(), verdicts.end(), [&](const DisasterVerdict& v) {
      return v.cls != DisasterClass::None && ev.covers(v.at);
    });
    if (!hit) ++missed;
  }
  return static_cast<double>(missed) / static_cast<double>(truth.size());
}

double false_positive_rate(std::span<const GroundTruthEvent> truth,
                           std::span<const DisasterVerdict> verdicts) {
  std::size_t quiet = 0;
  std::size_t alarms = 0;
  for (const auto& v : verdicts) {
    const bool inside = std::any_of(truth.begin(), truth.end(),
                                    [&](const GroundTruthEvent& ev) { return ev.covers(v.at); });
    if (inside) continue;
    ++quiet;
    if (v.cls != DisasterClass::None) ++alarms;
  }
  return quiet == 0 ? 0.0 : static_cast<double>(alarms) / static_cast<double>(quiet);
}

std::vector<GroundTruthEvent> schedule_events(int count, SimTime duration, SimTime horizon,
                                              RngStream& rng) {
  std::vector<GroundTruthEvent> events;
  if (count <= 0) return events;
  const std::int64_t slot = horizon.ms() / count;
  const std::int64_t slack = std::max<std::int64_t>(0, slot - duration.ms() - 1);
  for (int i = 0; i < count; ++i) {
    const auto cls = static_cast<DisasterClass>(1 + rng.below(kNumClasses - 1));
    const std::int64_t offset = slack > 0 ? static_cast<std::int64_t>(rng.below(slack + 1)) : 0;
    events.push_back(GroundTruthEvent{cls, SimTime::from_ms(i * slot + offset), duration});
  }
  return events;
}

TrainResult train_detector_model(const DetectionParams& params, std::uint64_t seed) {
  const auto gen = GeneratorConfig::from(params);
  RngStream data_rng(seed, "detection/dataset");
  RngStream init_rng(seed, "detection/init");
  const Dataset data = synth_dataset(gen, data_rng);
  return train(Mlp(params.n_groups, params.n_hidden, kNumClasses), data, params.train, init_rng);
}

DetectorEvaluation evaluate_detector(const Mlp& detector, const GeneratorConfig& gen,
                                     RngStream& rng) {
  const Dataset data = synth_dataset(gen, rng);
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "evaluation set is empty");
  int correct = 0, disasters = 0, missed = 0, quiet = 0, alarms = 0;
  for (const auto& s : data) {
    const DisasterClass truth = argmax_class(s.target);
    const DisasterClass got = argmax_class(forward(detector, s.input));
    if (got == truth) ++correct;
    if (truth == DisasterClass::None) {
      ++quiet;
      if (got != DisasterClass::None) ++alarms;
    } else {
      ++disasters;
      if (got == DisasterClass::None) ++missed;
    }
  }
  DetectorEvaluation ev;
  ev.samples = static_cast<int>(data.size());
  ev.accuracy = static_cast<double>(correct) / ev.samples;
  ev.false_negative_rate = disasters > 0 ? static_cast<double>(missed) / disasters : 0.0;
  ev.false_positive_rate = quiet > 0 ? static_cast<double>(alarms) / quiet : 0.0;
  return ev;
}

// ---------------------------------------------------------------------------

DetectionSite::DetectionSite(Simulator& sim, Mlp detector, GeneratorConfig gen, SimTime interval,
                             std::vector<GroundTruthEvent> truth, RngStream rng, int site_id)
    : sim_(sim),
      detector_(std::move(detector)),
      gen_(std::move(gen)),
      interval_(interval),
      truth_(std::move(truth)),
      rng_(std::move(rng)),
      site_id_(site_id) {}

DisasterClass DetectionSite::truth_at(SimTime t) const {
  for (const auto& ev : truth_)
    if (ev.covers(t)) return ev.cls;
  return DisasterClass::None;
}

void DetectionSite::start(SimTime until) {
  if (sim_.now() + interval_ > until) return;
  sim_.schedule(sim_.now() + interval_, [this, until] { snapshot(until); }, EventKind::Snapshot,
                site_id_);
}

void DetectionSite::snapshot(SimTime until) {
  const SimTime now = sim_.now();
  auto readings = sample_readings(gen_, truth_at(now), now, rng_);
  const auto ctx = aggregate(std::move(readings), gen_.n_groups, site_id_, now);
  verdicts_.push_back(classify(detector_, ctx));
  if (sink_) sink_(verdicts_.back());
  if (now + interval_ <= until) {
    sim_.schedule(now + interval_, [this, until] { snapshot(until); }, EventKind::Snapshot,
                  site_id_);
  }
}

}  // namespace crahn
