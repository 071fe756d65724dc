#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "crahn/error.hpp"
#include "crahn/scenario.hpp"
#include "crahn/spectrum.hpp"

using namespace crahn;

namespace {

PrimaryUser pu_on(ChannelId ch, Vec2 at, double period_s = 5, double on_fraction = 0.4,
                  double phase_s = 0) {
  PrimaryUser pu;
  pu.channel = ch;
  pu.position = at;
  pu.period = seconds(period_s);
  pu.on_fraction = on_fraction;
  pu.phase = seconds(phase_s);
  return pu;
}

// Log over `window` with samples every 0.1 s ending at `now`; busy(k) decides
// sample k counted from the oldest.
template <typename F>
OccupancyLog filled_log(int channels, SimTime now, SimTime window, F busy) {
  OccupancyLog log(0, channels, window, SimTime::from_ms(100));
  const std::int64_t n = window.ms() / 100;
  for (std::int64_t k = 0; k < n; ++k) {
    const SimTime at = now - window + SimTime::from_ms(100 * (k + 1));
    std::vector<bool> b(channels);
    for (int ch = 0; ch < channels; ++ch) b[ch] = busy(ch, k);
    log.record(at, b);
  }
  return log;
}

ScenarioConfig small_spectrum_config() {
  ScenarioConfig cfg;
  cfg.num_su = 1;
  cfg.num_pu = 1;
  cfg.num_channels = 2;
  cfg.spectrum.selector = "heuristic";
  return cfg;
}

}  // namespace

TEST(PuActive, DutyCycle) {
  const auto pu = pu_on(0, {});
  EXPECT_TRUE(pu_active(pu, seconds(1)));
  EXPECT_FALSE(pu_active(pu, seconds(3)));
  EXPECT_TRUE(pu_active(pu, seconds(5)));
  EXPECT_TRUE(pu_active(pu, seconds(0)));
  EXPECT_FALSE(pu_active(pu, seconds(2)));
  EXPECT_EQ(pu_onset(pu, seconds(6.5)), seconds(5));
}

TEST(PuActive, PhaseShiftsOnset) {
  const auto pu = pu_on(0, {}, 20, 0.5, 10);
  EXPECT_FALSE(pu_active(pu, seconds(9.999)));
  EXPECT_TRUE(pu_active(pu, seconds(10)));
  EXPECT_EQ(pu_onset(pu, seconds(12)), seconds(10));
  EXPECT_FALSE(pu_active(pu, seconds(20)));
}

TEST(Sense, RangeDecidesVisibility) {
  RngStream rng(1, "s");
  const std::vector<PrimaryUser> near{pu_on(3, {100, 0})};
  const std::vector<PrimaryUser> far{pu_on(3, {300, 0})};
  EXPECT_TRUE(sense({0, 0}, seconds(1), near, 10, 250, {}, rng)[3]);
  EXPECT_FALSE(sense({0, 0}, seconds(1), far, 10, 250, {}, rng)[3]);
}

TEST(Sense, CertainMissReportsAllIdle) {
  RngStream rng(1, "s");
  std::vector<PrimaryUser> pus;
  for (int ch = 0; ch < 10; ++ch) pus.push_back(pu_on(ch, {10, 10}));
  const auto busy = sense({0, 0}, seconds(1), pus, 10, 250, SensingErrors{1.0, 0.0}, rng);
  for (bool b : busy) EXPECT_FALSE(b);
}

TEST(Sense, CertainFalseAlarmReportsAllBusy) {
  RngStream rng(1, "s");
  const auto busy = sense({0, 0}, seconds(1), {}, 4, 250, SensingErrors{0.0, 1.0}, rng);
  for (bool b : busy) EXPECT_TRUE(b);
}

TEST(Features, AllIdleWindow) {
  const SimTime now = seconds(100), window = seconds(60);
  const auto log = filled_log(1, now, window, [](int, std::int64_t) { return false; });
  const auto f = features(log, 0, now);
  EXPECT_EQ(f.busy_fraction, 0.0);
  EXPECT_DOUBLE_EQ(f.time_since_busy_s, 60.0);
  EXPECT_NEAR(f.mean_idle_run_s, 60.0, 1e-9);
}

TEST(Features, AlternatingWindowIsHalfBusy) {
  const SimTime now = seconds(100), window = seconds(60);
  const auto log = filled_log(1, now, window, [](int, std::int64_t k) { return k % 2 == 0; });
  // Brute-force count over the same window.
  std::size_t busy = 0, total = 0;
  for (const auto& s : log.samples(0)) {
    ++total;
    busy += s.busy ? 1 : 0;
  }
  const auto f = features(log, 0, now);
  EXPECT_DOUBLE_EQ(f.busy_fraction, static_cast<double>(busy) / total);
  EXPECT_NEAR(f.busy_fraction, 0.5, 1.0 / 600.0);
  EXPECT_NEAR(f.time_since_busy_s, 0.1, 1e-9);
  EXPECT_NEAR(f.mean_idle_run_s, 0.1, 1e-9);
}

TEST(Features, EmptyWindowIsOptimistic) {
  const OccupancyLog log(0, 1, seconds(60), SimTime::from_ms(100));
  const auto f = features(log, 0, seconds(5));
  EXPECT_EQ(f.busy_fraction, 0.0);
  EXPECT_EQ(f.time_since_busy_s, 60.0);
  const auto x = f.normalized(seconds(60));
  EXPECT_EQ(x[0], 0.0);
  EXPECT_EQ(x[1], 1.0);
}

TEST(OccupancyLog, KeepsOnlyTheWindow) {
  const auto log = filled_log(1, seconds(200), seconds(60), [](int, std::int64_t) { return false; });
  EXPECT_EQ(log.samples(0).size(), 600u);
  OccupancyLog copy = log;
  copy.record(0, seconds(200.1), true);
  EXPECT_EQ(copy.samples(0).size(), 600u);
  EXPECT_EQ(copy.last_busy(0), true);
}

TEST(SelectChannel, EmptyLogsTieToChannelZero) {
  const OccupancyLog log(0, 10, seconds(60), SimTime::from_ms(100));
  RngStream rng(1, "m");
  const Mlp manager = Mlp::random(3, 5, 1, rng, 0.5);
  EXPECT_EQ(select_channel(manager, log, seconds(1)), 0);
  EXPECT_EQ(select_channel_heuristic(log, seconds(1)), 0);
}

TEST(SelectChannel, PrefersTheNeverBusyChannel) {
  // ch 0 busy right now; ch 1 busy 80% of the window but idle at the last
  // sample; ch 2 never busy.
  const SimTime now = seconds(100), window = seconds(60);
  const auto log = filled_log(3, now, window, [](int ch, std::int64_t k) {
    if (ch == 0) return true;
    if (ch == 1) return k % 5 != 4;
    return false;
  });
  EXPECT_EQ(select_channel_heuristic(log, now), 2);

  ScenarioConfig cfg;
  const auto pus = make_primary_users(cfg, cfg.master_seed);
  const auto trained = train_spectrum_manager(cfg, pus, cfg.master_seed);
  EXPECT_EQ(select_channel(trained.net, log, now), 2);
}

TEST(SelectChannel, AllBusyThrows) {
  const auto log = filled_log(4, seconds(100), seconds(60), [](int, std::int64_t) { return true; });
  try {
    select_channel_heuristic(log, seconds(100));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoIdleChannel);
  }
  EXPECT_THROW(select_channel(Mlp(3, 2, 1), log, seconds(100)), Error);
}

TEST(SelectChannelProperty, ArgmaxInvariantToPositiveScaling) {
  RngStream rng(4, "scale");
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(9));
    OccupancyLog log(0, n, seconds(60), SimTime::from_ms(100));
    std::vector<bool> busy(n);
    for (int ch = 0; ch < n; ++ch) busy[ch] = rng.bernoulli(0.3);
    busy[rng.below(n)] = false;
    log.record(seconds(1), busy);
    std::vector<double> scores(n);
    for (auto& s : scores) s = rng.uniform01();
    const ChannelId pick = pick_idle_channel(log, scores);
    EXPECT_FALSE(busy[pick]);
    const double k = rng.uniform(1e-3, 1e3);
    for (auto& s : scores) s *= k;
    ASSERT_EQ(pick_idle_channel(log, scores), pick);
  }
}

TEST(Trainset, IdleForeverTargetsOne) {
  OccupancyTrace trace;
  trace.busy.assign(1, std::vector<bool>(3000, false));
  const auto data = build_spectrum_trainset(trace, seconds(60), seconds(5), seconds(5));
  ASSERT_FALSE(data.empty());
  for (const auto& s : data) EXPECT_EQ(s.target[0], 1.0);
}

TEST(Trainset, PeriodicChannelAveragesIdleFraction) {
  const auto pu = pu_on(0, {}, 5, 0.4, 1.234);
  OccupancyTrace trace;
  trace.busy.assign(1, std::vector<bool>(4000));
  for (std::size_t k = 0; k < 4000; ++k) trace.busy[0][k] = pu_active(pu, SimTime::from_ms(100 * k));
  const auto data = build_spectrum_trainset(trace, seconds(60), seconds(5), seconds(0.7));
  double sum = 0;
  for (const auto& s : data) sum += s.target[0];
  EXPECT_NEAR(sum / data.size(), 0.6, 0.02);
}

TEST(Trainset, ShortTraceThrows) {
  OccupancyTrace trace;
  trace.busy.assign(2, std::vector<bool>(300, false));  // 30 s
  try {
    build_spectrum_trainset(trace, seconds(60), seconds(5), seconds(5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TraceTooShort);
  }
}

TEST(SwitchLedger, RecordsAndAverages) {
  SwitchLedger ledger;
  const auto& r = ledger.record_switch(3, seconds(10.0), seconds(10.0 + 0.1 + 0.05), 1, 4);
  EXPECT_EQ(r.switching_time(), seconds(0.15));
  EXPECT_EQ(ledger.record_switch(3, seconds(20), seconds(20), 4, 5).switching_time(), SimTime{});
  EXPECT_DOUBLE_EQ(ledger.mean_switch_time_s(), 0.075);
  EXPECT_EQ(ledger.per_su().at(3).switches, 2);
  try {
    ledger.record_switch(1, seconds(5), seconds(4.9), 0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NegativeDuration);
  }
  EXPECT_EQ(ledger.records().size(), 2u);
}

TEST(TxAudit, FlagsTransmissionOnBusyChannel) {
  TxAudit audit;
  audit.on_sense(0, {false, true});
  audit.on_tx_start(0, 0);
  EXPECT_EQ(audit.violations(), 0u);
  audit.on_sense(0, {true, false});  // must stop before the next observation
  audit.on_tx_stop(0);
  audit.on_tx_start(0, 1);
  EXPECT_EQ(audit.violations(), 0u);
  audit.on_sense(1, {true});
  audit.on_tx_start(1, 0);
  EXPECT_EQ(audit.violations(), 1u);
  audit.on_sense(0, {false, true});
  audit.on_sense(0, {false, true});
  EXPECT_EQ(audit.violations(), 2u);
}

namespace {

struct FieldRun {
  std::vector<SwitchRecord> switches;
  SimTime first_sense = SimTime::from_ms(-1);
};

FieldRun run_field(const ScenarioConfig& cfg, std::vector<PrimaryUser> pus, double until_s) {
  Simulator sim;
  FieldRun out;
  sim.set_trace([&](const Event& ev) {
    if (ev.kind == EventKind::Sense && out.first_sense.ms() < 0) out.first_sense = ev.fire_at;
  });
  SpectrumField field(sim, cfg, std::move(pus), [](int, SimTime) { return Vec2{0, 0}; },
                      heuristic_selector(), 5);
  field.start(seconds(until_s));
  sim.run_until(seconds(until_s));
  field.finish();
  EXPECT_EQ(field.audit().violations(), 0u);
  out.switches = field.ledger().records();
  return out;
}

}  // namespace

TEST(SpectrumField, AppearanceJustAfterIdleTickTakesOneIntervalPlusRetune) {
  const auto cfg = small_spectrum_config();
  const auto probe = run_field(cfg, {}, 1);
  ASSERT_GE(probe.first_sense.ms(), 0);
  // The SU ticks at phase + k*100 ms and parks on channel 0. Put the PU
  // onset 1 ms after the tick at phase + 10 s.
  const double onset_s = 10.0 + probe.first_sense.seconds() + 0.001;
  const auto pu = pu_on(0, {10, 0}, 40, 0.5, 40 - onset_s);
  const auto run = run_field(cfg, {pu}, 15);
  ASSERT_EQ(run.switches.size(), 1u);
  const auto& sw = run.switches[0];
  EXPECT_EQ(sw.pu_appeared_at, seconds(onset_s));
  EXPECT_EQ(sw.switching_time(), SimTime::from_ms(149));
  EXPECT_EQ(sw.from_channel, 0);
  EXPECT_EQ(sw.to_channel, 1);
}

TEST(SpectrumField, AppearanceOnATickTakesOnlyTheRetune) {
  const auto cfg = small_spectrum_config();
  const auto probe = run_field(cfg, {}, 1);
  const double onset_s = 10.0 + probe.first_sense.seconds();
  const auto pu = pu_on(0, {10, 0}, 40, 0.5, 40 - onset_s);
  const auto run = run_field(cfg, {pu}, 15);
  ASSERT_EQ(run.switches.size(), 1u);
  EXPECT_EQ(run.switches[0].switching_time(), SimTime::from_ms(50));
}

TEST(SpectrumField, NoIdleChannelDefersUntilOneFrees) {
  auto cfg = small_spectrum_config();
  cfg.num_pu = 2;
  const auto probe = run_field(cfg, {}, 1);
  const double onset_s = 10.0 + probe.first_sense.seconds() + 0.001;
  // Channel 0 goes busy at onset; channel 1 is busy for the first 10.5 s.
  const auto pu0 = pu_on(0, {10, 0}, 40, 0.5, 40 - onset_s);
  const auto pu1 = pu_on(1, {10, 0}, 40, 10.5 / 40.0, 0);
  Simulator sim;
  SpectrumField field(sim, cfg, {pu0, pu1}, [](int, SimTime) { return Vec2{0, 0}; },
                      heuristic_selector(), 5);
  field.start(seconds(15));
  sim.run_until(seconds(15));
  field.finish();
  ASSERT_EQ(field.ledger().records().size(), 1u);
  const auto& sw = field.ledger().records()[0];
  EXPECT_GT(field.deferrals(), 0u);
  EXPECT_GT(sw.switching_time(), seconds(0.15));
  EXPECT_GE(sw.resumed_at, seconds(10.5));
  EXPECT_EQ(sw.to_channel, 1);
  EXPECT_EQ(field.audit().violations(), 0u);
  EXPECT_EQ(field.vacates(), field.ledger().records().size() + field.pending_switches());
}

TEST(SpectrumFieldProperty, DefaultScenarioInvariants) {
  ScenarioConfig cfg;
  cfg.scenarios = {false, true, false, false, false};
  cfg.sim_duration_s = 300;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    cfg.master_seed = seed;
    const auto run = run_simulation(cfg);
    EXPECT_EQ(run.tx_violations, 0u);
    EXPECT_GT(run.tx_checks, 0u);
    EXPECT_FALSE(run.switches.empty());
    EXPECT_EQ(run.spectrum_vacates, run.switches.size() + run.spectrum_pending);
    for (const auto& s : run.switches) {
      ASSERT_LE(s.switching_time(), seconds(0.15));
      ASSERT_GE(s.switching_time(), SimTime{});
    }
  }
}

TEST(SpectrumFieldProperty, SensingErrorsNeverCauseBusyTransmission) {
  ScenarioConfig cfg;
  cfg.scenarios = {false, true, false, false, false};
  cfg.sim_duration_s = 200;
  cfg.spectrum.p_miss = 0.1;
  cfg.spectrum.p_false = 0.1;
  cfg.spectrum.selector = "heuristic";
  const auto run = run_simulation(cfg);
  EXPECT_EQ(run.tx_violations, 0u);
  EXPECT_EQ(run.spectrum_vacates, run.switches.size() + run.spectrum_pending);
}

TEST(PrimaryUsers, PlacementIsSeededAndCyclesChannels) {
  ScenarioConfig cfg;
  cfg.num_pu = 12;
  const auto a = make_primary_users(cfg, 4);
  const auto b = make_primary_users(cfg, 4);
  ASSERT_EQ(a.size(), 12u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].channel, static_cast<int>(i) % cfg.num_channels);
    EXPECT_EQ(a[i].position, b[i].position);
    EXPECT_GE(a[i].position.x, 0.0);
    EXPECT_LE(a[i].position.x, cfg.area_width_m);
  }
}
