#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "crahn/error.hpp"
#include "crahn/rng.hpp"
#include "crahn/sim_time.hpp"
#include "crahn/simulator.hpp"

namespace crahn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchedulingInPast: return "SchedulingInPast";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::TooFewReadings: return "TooFewReadings";
    case ErrorCode::NoIdleChannel: return "NoIdleChannel";
    case ErrorCode::TraceTooShort: return "TraceTooShort";
    case ErrorCode::NegativeDuration: return "NegativeDuration";
    case ErrorCode::NotANeighbor: return "NotANeighbor";
    case ErrorCode::XmlMalformed: return "XmlMalformed";
    case ErrorCode::XmlInvalidStatus: return "XmlInvalidStatus";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigParse: return 3;
    case ErrorCode::ConfigInvalid: return 4;
    case ErrorCode::IoError: return 5;
    case ErrorCode::DimensionMismatch:
    case ErrorCode::EmptyDataset: return 6;
    case ErrorCode::XmlMalformed:
    case ErrorCode::XmlInvalidStatus: return 7;
    default: return 1;
  }
}

std::string SimTime::str() const {
  const std::int64_t whole = ms_ / 1000;
  const std::int64_t frac = ms_ % 1000;
  char buf[48];
  if (ms_ < 0) {
    std::snprintf(buf, sizeof buf, "-%lld.%03lld", static_cast<long long>(-whole),
                  static_cast<long long>(-frac));
  } else {
    std::snprintf(buf, sizeof buf, "%lld.%03lld", static_cast<long long>(whole),
                  static_cast<long long>(frac));
  }
  return buf;
}

// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label) {
  return splitmix64(splitmix64(master_seed) ^ fnv1a64(label));
}

RngStream::RngStream(std::uint64_t master_seed, std::string_view label)
    : label_(label), engine_(derive_seed(master_seed, label)) {}

double RngStream::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

std::uint64_t RngStream::below(std::uint64_t n) {
  // Lemire-style rejection keeps the draw unbiased.
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

bool RngStream::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01() < p;
}

double RngStream::normal(double mean, double sigma) {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + sigma * z;
}

// ---------------------------------------------------------------------------

Event Simulator::schedule(SimTime at, Handler handler, EventKind kind, NodeId target) {
  if (at < clock_) {
    throw Error(ErrorCode::SchedulingInPast,
                "event at t=" + at.str() + " but clock is " + clock_.str());
  }
  Event ev{at, next_seq_++, kind, target};
  heap_.push_back(Entry{ev, std::move(handler)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
  return ev;
}

std::uint64_t Simulator::run_until(SimTime end) {
  if (end < clock_) {
    throw Error(ErrorCode::SchedulingInPast,
                "run_until(" + end.str() + ") before clock " + clock_.str());
  }
  std::uint64_t fired = 0;
  while (!heap_.empty() && heap_.front().event.fire_at <= end) {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Entry entry = std::move(heap_.back());
    heap_.pop_back();
    clock_ = entry.event.fire_at;
    if (trace_) trace_(entry.event);
    entry.handler();
    ++fired;
    ++processed_;
  }
  clock_ = end;
  return fired;
}

}  // namespace crahn
