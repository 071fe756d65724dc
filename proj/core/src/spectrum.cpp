#include "crahn/spectrum.hpp"

#include <algorithm>
#include <cmath>

#include "crahn/error.hpp"

namespace crahn {

std::vector<Channel> make_channels(int count, const std::string& band_label) {
  std::vector<Channel> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(Channel{i, band_label});
  return out;
}

SimTime PrimaryUser::on_time() const {
  return SimTime::from_ms(std::llround(on_fraction * static_cast<double>(period.ms())));
}

bool pu_active(const PrimaryUser& pu, SimTime t) {
  const std::int64_t cycle = (t + pu.phase).ms() % pu.period.ms();
  return cycle < pu.on_time().ms();
}

SimTime pu_onset(const PrimaryUser& pu, SimTime t) {
  const std::int64_t cycle = (t + pu.phase).ms() % pu.period.ms();
  return t - SimTime::from_ms(cycle);
}

std::vector<bool> sense(Vec2 position, SimTime t, std::span<const PrimaryUser> pus,
                        int num_channels, double range_m, SensingErrors err, RngStream& rng) {
  std::vector<bool> busy(num_channels, false);
  for (const auto& pu : pus) {
    if (pu.channel < 0 || pu.channel >= num_channels) continue;
    if (pu_active(pu, t) && within_range(position, pu.position, range_m)) busy[pu.channel] = true;
  }
  if (err.p_miss > 0.0 || err.p_false > 0.0) {
    for (int ch = 0; ch < num_channels; ++ch) {
      if (busy[ch]) {
        if (rng.bernoulli(err.p_miss)) busy[ch] = false;
      } else if (rng.bernoulli(err.p_false)) {
        busy[ch] = true;
      }
    }
  }
  return busy;
}

// ---------------------------------------------------------------------------

OccupancyLog::OccupancyLog(int owner, int num_channels, SimTime window, SimTime sample_interval)
    : owner_(owner), window_(window), sample_interval_(sample_interval), series_(num_channels) {}

void OccupancyLog::record(SimTime at, const std::vector<bool>& busy) {
  const int n = std::min<int>(num_channels(), static_cast<int>(busy.size()));
  for (int ch = 0; ch < n; ++ch) record(ch, at, busy[ch]);
}

void OccupancyLog::record(ChannelId ch, SimTime at, bool busy) {
  auto& s = series_.at(ch);
  s.push_back(OccupancySample{at, busy});
  trim(ch, at);
}

void OccupancyLog::trim(ChannelId ch, SimTime now) {
  auto& s = series_[ch];
  while (!s.empty() && s.front().at <= now - window_) s.pop_front();
}

std::optional<bool> OccupancyLog::last_busy(ChannelId ch) const {
  const auto& s = series_.at(ch);
  if (s.empty()) return std::nullopt;
  return s.back().busy;
}

std::array<double, 3> ChannelFeatures::normalized(SimTime window) const {
  const double w = window.seconds();
  return {std::clamp(busy_fraction, 0.0, 1.0), std::clamp(time_since_busy_s / w, 0.0, 1.0),
          std::clamp(mean_idle_run_s / w, 0.0, 1.0)};
}

ChannelFeatures features(const OccupancyLog& log, ChannelId ch, SimTime now) {
  const double window_s = log.window().seconds();
  const SimTime from = now - log.window();
  std::size_t total = 0;
  std::size_t busy = 0;
  std::optional<SimTime> last_busy_at;
  std::size_t runs = 0;
  std::size_t idle_in_runs = 0;
  bool in_run = false;
  for (const auto& s : log.samples(ch)) {
    if (s.at <= from || s.at > now) continue;
    ++total;
    if (s.busy) {
      ++busy;
      last_busy_at = s.at;
      in_run = false;
    } else {
      if (!in_run) ++runs;
      in_run = true;
      ++idle_in_runs;
    }
  }
  if (total == 0) return ChannelFeatures{0.0, window_s, window_s};

  ChannelFeatures f;
  f.busy_fraction = static_cast<double>(busy) / static_cast<double>(total);
  f.time_since_busy_s = last_busy_at ? (now - *last_busy_at).seconds() : window_s;
  f.mean_idle_run_s = runs == 0 ? 0.0
                                : static_cast<double>(idle_in_runs) / static_cast<double>(runs) *
                                      log.sample_interval().seconds();
  return f;
}

ChannelId pick_idle_channel(const OccupancyLog& log, std::span<const double> scores) {
  if (static_cast<int>(scores.size()) != log.num_channels()) {
    throw Error(ErrorCode::DimensionMismatch, "one score per channel is needed");
  }
  ChannelId best = kNoChannel;
  for (ChannelId ch = 0; ch < log.num_channels(); ++ch) {
    if (log.last_busy(ch).value_or(false)) continue;
    if (best == kNoChannel || scores[ch] > scores[best]) best = ch;
  }
  if (best == kNoChannel) {
    throw Error(ErrorCode::NoIdleChannel,
                "node " + std::to_string(log.owner()) + " senses every channel busy");
  }
  return best;
}

namespace {

template <typename Score>
ChannelId best_idle(const OccupancyLog& log, Score score) {
  std::vector<double> scores(log.num_channels(), 0.0);
  for (ChannelId ch = 0; ch < log.num_channels(); ++ch) {
    if (!log.last_busy(ch).value_or(false)) scores[ch] = score(ch);
  }
  return pick_idle_channel(log, scores);
}

}  // namespace

ChannelId select_channel(const Mlp& manager, const OccupancyLog& log, SimTime now) {
  return best_idle(log, [&](ChannelId ch) {
    const auto x = features(log, ch, now).normalized(log.window());
    return forward(manager, x)[0];
  });
}

ChannelId select_channel_heuristic(const OccupancyLog& log, SimTime now) {
  return best_idle(log, [&](ChannelId ch) { return features(log, ch, now).time_since_busy_s; });
}

ChannelSelector ann_selector(Mlp manager) {
  return [net = std::move(manager)](const OccupancyLog& log, SimTime now) {
    return select_channel(net, log, now);
  };
}

ChannelSelector heuristic_selector() {
  return [](const OccupancyLog& log, SimTime now) { return select_channel_heuristic(log, now); };
}

// ---------------------------------------------------------------------------

SimTime OccupancyTrace::duration() const {
  const std::size_t n = busy.empty() ? 0 : busy.front().size();
  return interval * static_cast<std::int64_t>(n);
}

Dataset build_spectrum_trainset(const OccupancyTrace& trace, SimTime window, SimTime horizon,
                                SimTime stride) {
  if (trace.duration() < window * 2) {
    throw Error(ErrorCode::TraceTooShort, "trace spans " + trace.duration().str() +
                                              " s, need at least " + (window * 2).str() + " s");
  }
  const std::int64_t dt = trace.interval.ms();
  const std::size_t n = trace.busy.front().size();
  const auto at = [&](std::size_t k) { return trace.start + SimTime::from_ms(dt * k); };

  Dataset data;
  for (std::size_t ch = 0; ch < trace.busy.size(); ++ch) {
    const auto& series = trace.busy[ch];
    for (SimTime t = trace.start + window; t + horizon <= at(n - 1); t += stride) {
      OccupancyLog log(0, 1, window, trace.interval);
      std::size_t k = 0;
      for (; k < n && at(k) <= t; ++k) {
        if (at(k) > t - window) log.record(0, at(k), series[k]);
      }
      std::size_t ahead = 0;
      std::size_t idle = 0;
      for (; k < n && at(k) <= t + horizon; ++k) {
        ++ahead;
        if (!series[k]) ++idle;
      }
      if (ahead == 0) continue;
      const auto x = features(log, 0, t).normalized(window);
      data.push_back(Sample{{x.begin(), x.end()},
                            {static_cast<double>(idle) / static_cast<double>(ahead)}});
    }
  }
  return data;
}

// ---------------------------------------------------------------------------

const SwitchRecord& SwitchLedger::record_switch(int su_id, SimTime pu_appeared_at,
                                                SimTime resumed_at, ChannelId from, ChannelId to) {
  if (resumed_at < pu_appeared_at) {
    throw Error(ErrorCode::NegativeDuration, "resumed at " + resumed_at.str() +
                                                 " before PU appeared at " + pu_appeared_at.str());
  }
  records_.push_back(SwitchRecord{su_id, from, to, pu_appeared_at, resumed_at});
  return records_.back();
}

double SwitchLedger::mean_switch_time_s() const {
  if (records_.empty()) return 0.0;
  std::int64_t total = 0;
  for (const auto& r : records_) total += r.switching_time().ms();
  return static_cast<double>(total) / 1000.0 / static_cast<double>(records_.size());
}

std::map<int, SwitchStats> SwitchLedger::per_su() const {
  std::map<int, std::int64_t> total;
  std::map<int, SwitchStats> out;
  for (const auto& r : records_) {
    ++out[r.su_id].switches;
    total[r.su_id] += r.switching_time().ms();
  }
  for (auto& [su, st] : out) {
    st.mean_switch_time_s = static_cast<double>(total[su]) / 1000.0 / st.switches;
  }
  return out;
}

// ---------------------------------------------------------------------------

void TxAudit::on_sense(int su, const std::vector<bool>& busy) {
  auto& v = nodes_[su];
  ++checks_;
  if (v.must_stop) ++violations_;
  v.last_busy = busy;
  v.must_stop = v.tx != kNoChannel && v.tx < static_cast<int>(busy.size()) && busy[v.tx];
}

void TxAudit::on_tx_start(int su, ChannelId ch) {
  auto& v = nodes_[su];
  ++checks_;
  if (v.must_stop) ++violations_;
  if (ch >= 0 && ch < static_cast<int>(v.last_busy.size()) && v.last_busy[ch]) ++violations_;
  v.tx = ch;
  v.must_stop = false;
}

void TxAudit::on_tx_stop(int su) {
  auto& v = nodes_[su];
  v.tx = kNoChannel;
  v.must_stop = false;
}

void TxAudit::finish() {
  for (auto& [su, v] : nodes_) {
    if (v.must_stop) ++violations_;
    v.must_stop = false;
  }
}

// ---------------------------------------------------------------------------

std::vector<PrimaryUser> make_primary_users(const ScenarioConfig& cfg, std::uint64_t seed) {
  RngStream placement(seed, "pu/placement");
  const SimTime period = seconds(cfg.spectrum.pu_period_s);
  std::vector<PrimaryUser> pus;
  for (int i = 0; i < cfg.num_pu; ++i) {
    PrimaryUser pu;
    pu.pu_id = i;
    pu.position = {placement.uniform(0.0, cfg.area_width_m),
                   placement.uniform(0.0, cfg.area_height_m)};
    pu.channel = i % cfg.num_channels;
    pu.period = period;
    pu.on_fraction = cfg.spectrum.pu_on_fraction;
    pu.phase = SimTime::from_ms(static_cast<std::int64_t>(placement.below(period.ms())));
    pus.push_back(pu);
  }
  return pus;
}

OccupancyTrace record_occupancy_trace(int node, const PositionFn& position,
                                      std::span<const PrimaryUser> pus, const ScenarioConfig& cfg,
                                      SimTime duration, RngStream& rng) {
  OccupancyTrace trace;
  trace.interval = seconds(cfg.spectrum.sensing_interval_s);
  trace.busy.assign(cfg.num_channels, {});
  const SensingErrors err{cfg.spectrum.p_miss, cfg.spectrum.p_false};
  for (SimTime t; t < duration; t += trace.interval) {
    const auto busy = sense(position(node, t), t, pus, cfg.num_channels, cfg.radio_range_m, err, rng);
    for (int ch = 0; ch < cfg.num_channels; ++ch) trace.busy[ch].push_back(busy[ch]);
  }
  return trace;
}

// ---------------------------------------------------------------------------

SpectrumField::SpectrumField(Simulator& sim, const ScenarioConfig& cfg,
                             std::vector<PrimaryUser> pus, PositionFn position,
                             ChannelSelector selector, std::uint64_t seed)
    : sim_(sim),
      cfg_(cfg),
      pus_(std::move(pus)),
      position_(std::move(position)),
      selector_(std::move(selector)),
      interval_(seconds(cfg.spectrum.sensing_interval_s)),
      retune_(seconds(cfg.spectrum.retune_delay_s)),
      errors_{cfg.spectrum.p_miss, cfg.spectrum.p_false} {
  radios_.reserve(cfg.num_su);
  for (int su = 0; su < cfg.num_su; ++su) {
    radios_.emplace_back(su,
                         OccupancyLog(su, cfg.num_channels, seconds(cfg.spectrum.window_s),
                                      interval_),
                         RngStream(seed, "sense/" + std::to_string(su)));
  }
}

void SpectrumField::start(SimTime until) {
  for (auto& r : radios_) {
    const SimTime first =
        sim_.now() + SimTime::from_ms(static_cast<std::int64_t>(r.rng.below(interval_.ms())));
    if (first > until) continue;
    const int su = r.su;
    sim_.schedule(first, [this, su, until] { tick(su, until); }, EventKind::Sense, su);
  }
}

SimTime SpectrumField::appearance_time(const Radio& r, SimTime now, ChannelId ch) const {
  // The channel was sensed idle at the previous tick, so the PU showed up in
  // (previous_tick, now]. Use the earliest active in-range PU's onset, but
  // never earlier than that previous idle observation.
  const SimTime floor = r.previous_tick.value_or(now);
  const Vec2 pos = position_(r.su, now);
  std::optional<SimTime> onset;
  for (const auto& pu : pus_) {
    if (pu.channel != ch || !pu_active(pu, now) ||
        !within_range(pos, pu.position, cfg_.radio_range_m)) {
      continue;
    }
    const SimTime o = pu_onset(pu, now);
    if (!onset || o < *onset) onset = o;
  }
  return onset ? std::max(*onset, floor) : floor;
}

std::size_t SpectrumField::pending_switches() const {
  return static_cast<std::size_t>(
      std::count_if(radios_.begin(), radios_.end(), [](const Radio& r) { return r.pending.has_value(); }));
}

void SpectrumField::tick(int su, SimTime until) {
  Radio& r = radios_[su];
  const SimTime now = sim_.now();
  const auto busy =
      sense(position_(su, now), now, pus_, cfg_.num_channels, cfg_.radio_range_m, errors_, r.rng);
  ++sense_events_;
  r.log.record(now, busy);
  audit_.on_sense(su, busy);

  if (r.state == State::Transmitting && busy[r.channel]) {
    audit_.on_tx_stop(su);
    ++vacates_;
    r.pending = PendingSwitch{r.channel, appearance_time(r, now, r.channel)};
    r.state = State::Searching;
  }
  if (r.state == State::Searching) try_select(r, now);

  r.previous_tick = now;
  if (now + interval_ <= until) {
    sim_.schedule(now + interval_, [this, su, until] { tick(su, until); }, EventKind::Sense, su);
  }
}

void SpectrumField::try_select(Radio& r, SimTime now) {
  try {
    r.target = selector_(r.log, now);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoIdleChannel) throw;
    ++deferrals_;
    return;
  }
  r.state = State::Retuning;
  const int su = r.su;
  sim_.schedule(now + retune_, [this, su] { finish_retune(su); }, EventKind::Retune, su);
}

void SpectrumField::finish_retune(int su) {
  Radio& r = radios_[su];
  if (r.state != State::Retuning) return;
  if (r.log.last_busy(r.target).value_or(false)) {
    // Target was sensed busy while retuning; search again at the next tick.
    r.state = State::Searching;
    ++deferrals_;
    return;
  }
  r.state = State::Transmitting;
  r.channel = r.target;
  audit_.on_tx_start(su, r.channel);
  if (r.pending) {
    ledger_.record_switch(su, r.pending->appeared, sim_.now(), r.pending->from, r.channel);
    r.pending.reset();
  }
}

}  // namespace crahn
