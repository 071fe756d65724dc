#include "crahn/mobility.hpp"

#include <algorithm>
#include <iostream>

namespace crahn {

RandomWaypoint::RandomWaypoint(Vec2 start, Vec2 waypoint, double speed, MobilityBounds bounds,
                               RngStream rng)
    : bounds_(bounds), rng_(std::move(rng)), from_(start), to_(waypoint) {
  speed_ = std::clamp(speed, bounds.v_min, bounds.v_max);
  if (speed_ != speed) {
    clamped_ = true;
    std::clog << "mobility: speed " << speed << " m/s outside [" << bounds.v_min << ", "
              << bounds.v_max << "], clamped to " << speed_ << "\n";
  }
  arrive_ = distance(from_, to_) / speed_;
  pause_end_ = arrive_ + bounds_.pause_s;
}

RandomWaypoint::RandomWaypoint(Vec2 at) : stationary_(true), from_(at), to_(at) {}

RandomWaypoint RandomWaypoint::random(MobilityBounds bounds, RngStream rng) {
  const Vec2 start{rng.uniform(0.0, bounds.width), rng.uniform(0.0, bounds.height)};
  const Vec2 waypoint{rng.uniform(0.0, bounds.width), rng.uniform(0.0, bounds.height)};
  const double speed = rng.uniform(bounds.v_min, bounds.v_max);
  return RandomWaypoint(start, waypoint, speed, bounds, std::move(rng));
}

RandomWaypoint RandomWaypoint::stationary(Vec2 at) { return RandomWaypoint(at); }

void RandomWaypoint::next_leg() {
  from_ = to_;
  to_ = {rng_->uniform(0.0, bounds_.width), rng_->uniform(0.0, bounds_.height)};
  speed_ = rng_->uniform(bounds_.v_min, bounds_.v_max);
  leg_start_ = pause_end_;
  arrive_ = leg_start_ + distance(from_, to_) / speed_;
  pause_end_ = arrive_ + bounds_.pause_s;
}

Vec2 RandomWaypoint::position_at(SimTime t) {
  if (stationary_) return from_;
  const double s = t.seconds();
  while (s > pause_end_) next_leg();
  if (s >= arrive_) return to_;
  if (s <= leg_start_) return from_;
  const double frac = arrive_ > leg_start_ ? (s - leg_start_) / (arrive_ - leg_start_) : 1.0;
  return {from_.x + (to_.x - from_.x) * frac, from_.y + (to_.y - from_.y) * frac};
}

}  // namespace crahn
