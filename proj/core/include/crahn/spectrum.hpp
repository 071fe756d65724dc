#pragma once

#include <array>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crahn/config.hpp"
#include "crahn/geometry.hpp"
#include "crahn/mlp.hpp"
#include "crahn/rng.hpp"
#include "crahn/sim_time.hpp"
#include "crahn/simulator.hpp"

namespace crahn {

using ChannelId = int;
inline constexpr ChannelId kNoChannel = -1;

struct Channel {
  ChannelId id = 0;
  std::string band_label;
};

/// Discretizes the configured band into dense channel ids.
std::vector<Channel> make_channels(int count, const std::string& band_label);

/// Licensed user with a periodic duty cycle on one channel. Static position.
struct PrimaryUser {
  int pu_id = 0;
  Vec2 position;
  ChannelId channel = 0;
  SimTime period = SimTime::from_ms(5000);
  double on_fraction = 0.4;
  SimTime phase;

  SimTime on_time() const;
};

/// True iff ((t + phase) mod period) < on_fraction * period.
bool pu_active(const PrimaryUser& pu, SimTime t);

/// Start of the ON period containing t. Only meaningful when pu_active(pu, t).
SimTime pu_onset(const PrimaryUser& pu, SimTime t);

struct SensingErrors {
  double p_miss = 0.0;   // busy reported idle
  double p_false = 0.0;  // idle reported busy
};

/// Per-channel busy vector seen from `position` at time t.
std::vector<bool> sense(Vec2 position, SimTime t, std::span<const PrimaryUser> pus,
                        int num_channels, double range_m, SensingErrors err, RngStream& rng);

struct OccupancySample {
  SimTime at;
  bool busy = false;
};

/// Sliding-window record of sensed occupancy, one series per channel.
class OccupancyLog {
 public:
  OccupancyLog(int owner, int num_channels, SimTime window, SimTime sample_interval);

  int owner() const { return owner_; }
  int num_channels() const { return static_cast<int>(series_.size()); }
  SimTime window() const { return window_; }
  SimTime sample_interval() const { return sample_interval_; }

  /// Appends one sensing result for every channel and trims the window.
  void record(SimTime at, const std::vector<bool>& busy);
  /// Appends a single sample. Samples on a channel must be time-ordered.
  void record(ChannelId ch, SimTime at, bool busy);

  const std::deque<OccupancySample>& samples(ChannelId ch) const { return series_.at(ch); }
  /// Latest sensed state of ch, or nullopt when never sensed.
  std::optional<bool> last_busy(ChannelId ch) const;

 private:
  void trim(ChannelId ch, SimTime now);

  int owner_;
  SimTime window_;
  SimTime sample_interval_;
  std::vector<std::deque<OccupancySample>> series_;
};

struct ChannelFeatures {
  double busy_fraction = 0.0;
  double time_since_busy_s = 0.0;
  double mean_idle_run_s = 0.0;

  /// Time-like features divided by the window length, all clamped to [0,1].
  std::array<double, 3> normalized(SimTime window) const;
};

/// Features over the samples in (now - window, now]. An empty window yields
/// the optimistic default (never busy, idle for the whole window).
ChannelFeatures features(const OccupancyLog& log, ChannelId ch, SimTime now);

/// Highest-scoring channel not last sensed busy; ties go to the lowest id and
/// never-sensed channels count as idle. Throws NoIdleChannel.
ChannelId pick_idle_channel(const OccupancyLog& log, std::span<const double> scores);

/// Highest-scoring channel whose latest sensed state is idle (never-sensed
/// channels count as idle); ties go to the lowest id. Throws NoIdleChannel.
ChannelId select_channel(const Mlp& manager, const OccupancyLog& log, SimTime now);

/// Baseline: longest time since last busy sample wins; ties to lowest id.
ChannelId select_channel_heuristic(const OccupancyLog& log, SimTime now);

using ChannelSelector = std::function<ChannelId(const OccupancyLog&, SimTime)>;

ChannelSelector ann_selector(Mlp manager);
ChannelSelector heuristic_selector();

/// Complete (unwindowed) sensing history of one node, sampled at a fixed interval.
struct OccupancyTrace {
  SimTime start;
  SimTime interval = SimTime::from_ms(100);
  std::vector<std::vector<bool>> busy;  // [channel][sample]

  SimTime duration() const;
};

/// Training samples: normalized features at each stride point ->
/// fraction of the following `horizon` the channel stayed idle.
/// Throws TraceTooShort when the trace spans less than two windows.
Dataset build_spectrum_trainset(const OccupancyTrace& trace, SimTime window, SimTime horizon,
                                SimTime stride);

struct SwitchRecord {
  int su_id = 0;
  ChannelId from_channel = kNoChannel;
  ChannelId to_channel = kNoChannel;
  SimTime pu_appeared_at;
  SimTime resumed_at;

  SimTime switching_time() const { return resumed_at - pu_appeared_at; }
};

struct SwitchStats {
  int switches = 0;
  double mean_switch_time_s = 0.0;
};

class SwitchLedger {
 public:
  /// Throws NegativeDuration if resumed_at < pu_appeared_at.
  const SwitchRecord& record_switch(int su_id, SimTime pu_appeared_at, SimTime resumed_at,
                                    ChannelId from, ChannelId to);

  const std::vector<SwitchRecord>& records() const { return records_; }
  double mean_switch_time_s() const;
  std::map<int, SwitchStats> per_su() const;

 private:
  std::vector<SwitchRecord> records_;
};

/// Replays sense/transmit transitions and counts moments where a node
/// transmits on a channel whose most recent sensing said busy.
class TxAudit {
 public:
  void on_sense(int su, const std::vector<bool>& busy);
  void on_tx_start(int su, ChannelId ch);
  void on_tx_stop(int su);
  /// Flags nodes still transmitting on a busy-sensed channel.
  void finish();

  std::uint64_t violations() const { return violations_; }
  std::uint64_t checks() const { return checks_; }

 private:
  struct NodeView {
    std::vector<bool> last_busy;
    ChannelId tx = kNoChannel;
    bool must_stop = false;
  };
  std::map<int, NodeView> nodes_;
  std::uint64_t violations_ = 0;
  std::uint64_t checks_ = 0;
};

using PositionFn = std::function<Vec2(int node, SimTime t)>;

/// Places PUs uniformly in the area with home channel pu_id mod num_channels
/// and a random phase.
std::vector<PrimaryUser> make_primary_users(const ScenarioConfig& cfg, std::uint64_t seed);

/// Samples a node's sensing results every interval for `duration`.
OccupancyTrace record_occupancy_trace(int node, const PositionFn& position,
                                      std::span<const PrimaryUser> pus, const ScenarioConfig& cfg,
                                      SimTime duration, RngStream& rng);

/// Engine-driven secondary users: periodic sensing, vacate on PU appearance,
/// select and retune to a new hole, and log the switch.
class SpectrumField {
 public:
  SpectrumField(Simulator& sim, const ScenarioConfig& cfg, std::vector<PrimaryUser> pus,
                PositionFn position, ChannelSelector selector, std::uint64_t seed);

  void start(SimTime until);

  const SwitchLedger& ledger() const { return ledger_; }
  const TxAudit& audit() const { return audit_; }
  /// NoIdleChannel deferrals plus retunes aborted because the target went busy.
  std::uint64_t deferrals() const { return deferrals_; }
  std::uint64_t sense_events() const { return sense_events_; }
  /// Times a transmitting node left its channel after sensing it busy.
  std::uint64_t vacates() const { return vacates_; }
  /// Nodes that vacated and have not resumed yet.
  std::size_t pending_switches() const;
  const std::vector<PrimaryUser>& primary_users() const { return pus_; }
  /// Finalizes the audit; call once after the run.
  void finish() { audit_.finish(); }

  ChannelId channel_of(int su) const { return radios_.at(su).channel; }
  bool transmitting(int su) const { return radios_.at(su).state == State::Transmitting; }

 private:
  enum class State { Searching, Retuning, Transmitting };
  struct PendingSwitch {
    ChannelId from = kNoChannel;
    SimTime appeared;
  };
  struct Radio {
    Radio(int id, OccupancyLog l, RngStream r) : su(id), log(std::move(l)), rng(std::move(r)) {}
    int su;
    OccupancyLog log;
    RngStream rng;
    State state = State::Searching;
    ChannelId channel = kNoChannel;
    ChannelId target = kNoChannel;
    std::optional<PendingSwitch> pending;
    std::optional<SimTime> previous_tick;
  };

  void tick(int su, SimTime until);
  void try_select(Radio& r, SimTime now);
  void finish_retune(int su);
  SimTime appearance_time(const Radio& r, SimTime now, ChannelId ch) const;

  Simulator& sim_;
  ScenarioConfig cfg_;
  std::vector<PrimaryUser> pus_;
  PositionFn position_;
  ChannelSelector selector_;
  SimTime interval_;
  SimTime retune_;
  SensingErrors errors_;
  std::vector<Radio> radios_;
  SwitchLedger ledger_;
  TxAudit audit_;
  std::uint64_t deferrals_ = 0;
  std::uint64_t sense_events_ = 0;
  std::uint64_t vacates_ = 0;
};

}  // namespace crahn
