#pragma once

#include <cmath>

namespace crahn {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance_sq(Vec2 a, Vec2 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double distance(Vec2 a, Vec2 b) { return std::sqrt(distance_sq(a, b)); }

/// Inclusive range test on squared distances, so a pair exactly `range`
/// apart is in range.
inline bool within_range(Vec2 a, Vec2 b, double range) {
  return distance_sq(a, b) <= range * range;
}

}  // namespace crahn
