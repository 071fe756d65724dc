#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>

namespace crahn {

/// Simulation timestamp with 1 ms resolution.
///
/// Stored as an integer millisecond count so that sums of protocol delays
/// (10 ms hops, 50 ms retunes, 10 s call-tree waits) stay exact.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime from_ms(std::int64_t ms) { return SimTime(ms); }
  static SimTime from_seconds(double s) {
    return SimTime(static_cast<std::int64_t>(std::llround(s * 1000.0)));
  }

  constexpr std::int64_t ms() const { return ms_; }
  constexpr double seconds() const { return static_cast<double>(ms_) / 1000.0; }

  constexpr SimTime operator+(SimTime o) const { return SimTime(ms_ + o.ms_); }
  constexpr SimTime operator-(SimTime o) const { return SimTime(ms_ - o.ms_); }
  constexpr SimTime& operator+=(SimTime o) {
    ms_ += o.ms_;
    return *this;
  }
  constexpr SimTime operator*(std::int64_t k) const { return SimTime(ms_ * k); }

  constexpr auto operator<=>(const SimTime&) const = default;

  /// Seconds with exactly three decimals, e.g. "42.125".
  std::string str() const;

 private:
  constexpr explicit SimTime(std::int64_t ms) : ms_(ms) {}
  std::int64_t ms_ = 0;
};

inline SimTime seconds(double s) { return SimTime::from_seconds(s); }

}  // namespace crahn
