#pragma once

#include <optional>

#include "crahn/geometry.hpp"
#include "crahn/rng.hpp"
#include "crahn/sim_time.hpp"

namespace crahn {

struct MobilityBounds {
  double width = 1000.0;
  double height = 1000.0;
  double v_min = 1.0;
  double v_max = 5.0;
  double pause_s = 2.0;
};

/// Random waypoint: straight-line travel toward a uniform random waypoint,
/// pause on arrival, pick the next one. Queries must be non-decreasing in t;
/// legs are generated lazily from the node's own stream.
class RandomWaypoint {
 public:
  /// Start at `start`, heading for `waypoint` at `speed` (clamped to
  /// [v_min, v_max]; see speed_clamped()).
  RandomWaypoint(Vec2 start, Vec2 waypoint, double speed, MobilityBounds bounds, RngStream rng);

  /// Uniform start, waypoint and speed from `rng`.
  static RandomWaypoint random(MobilityBounds bounds, RngStream rng);

  /// A node that never moves.
  static RandomWaypoint stationary(Vec2 at);

  Vec2 position_at(SimTime t);

  Vec2 waypoint() const { return to_; }
  double speed() const { return speed_; }
  bool speed_clamped() const { return clamped_; }
  bool is_stationary() const { return stationary_; }

 private:
  RandomWaypoint(Vec2 at);
  void next_leg();

  MobilityBounds bounds_;
  std::optional<RngStream> rng_;
  bool stationary_ = false;
  bool clamped_ = false;
  // Current leg: travel from_ -> to_ during [leg_start_, arrive_), then
  // pause until pause_end_.
  Vec2 from_;
  Vec2 to_;
  double speed_ = 0.0;
  double leg_start_ = 0.0;
  double arrive_ = 0.0;
  double pause_end_ = 0.0;
};

}  // namespace crahn
