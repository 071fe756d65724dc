#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace crahn {

std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for the stream `label` under `master_seed`.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label);

/// Named pseudo-random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are not, so all conversions to
/// uniform/normal variates are done here by hand to keep every platform
/// on the same sequence.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view label);

  const std::string& label() const { return label_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p);
  /// Standard normal via Box-Muller (no cached second variate).
  double normal(double mean, double sigma);

 private:
  std::string label_;
  std::mt19937_64 engine_;
};

}  // namespace crahn
