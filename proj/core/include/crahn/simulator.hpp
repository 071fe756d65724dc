#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "crahn/sim_time.hpp"

namespace crahn {

using NodeId = int;
inline constexpr NodeId kSystemTarget = -1;

enum class EventKind : std::uint8_t {
  Generic,
  Sense,
  Retune,
  Delivery,
  Advert,
  Discovery,
  Timeout,
  Snapshot,
  Response,
  Situation,
};

struct Event {
  SimTime fire_at;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::Generic;
  NodeId target = kSystemTarget;
};

/// Single-threaded discrete-event core. Events with equal fire time fire in
/// insertion order.
class Simulator {
 public:
  using Handler = std::function<void()>;

  SimTime now() const { return clock_; }
  std::size_t pending() const { return heap_.size(); }
  std::uint64_t processed() const { return processed_; }

  /// Throws SchedulingInPast if `at` is before the current clock.
  Event schedule(SimTime at, Handler handler, EventKind kind = EventKind::Generic,
                 NodeId target = kSystemTarget);
  Event schedule_in(SimTime delay, Handler handler, EventKind kind = EventKind::Generic,
                    NodeId target = kSystemTarget) {
    return schedule(clock_ + delay, std::move(handler), kind, target);
  }

  /// Fires every event with fire_at <= end, then sets the clock to `end`.
  std::uint64_t run_until(SimTime end);

  /// Observer invoked before each handler; used by tests and traces.
  void set_trace(std::function<void(const Event&)> trace) { trace_ = std::move(trace); }

 private:
  struct Entry {
    Event event;
    Handler handler;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.event.fire_at != b.event.fire_at) return a.event.fire_at > b.event.fire_at;
      return a.event.seq > b.event.seq;
    }
  };

  SimTime clock_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t processed_ = 0;
  std::vector<Entry> heap_;  // min-heap on (fire_at, seq) via Later
  std::function<void(const Event&)> trace_;
};

}  // namespace crahn
