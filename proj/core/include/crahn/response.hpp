#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crahn/detection.hpp"
#include "crahn/discovery.hpp"
#include "crahn/rng.hpp"
#include "crahn/simulator.hpp"

namespace crahn {

/// Escalation order, level 1 first.
struct CallTree {
  std::vector<NodeId> levels;

  /// Throws PreconditionViolation if empty or if a node appears twice.
  void validate() const;
};

struct PersonnelModel {
  NodeId node_id = 0;
  double respond_prob = 1.0;
  SimTime delay_min = SimTime::from_ms(1000);
  SimTime delay_max = SimTime::from_ms(5000);
};

/// With probability respond_prob, the time at which the person answers a
/// call placed at t; nullopt means silence.
std::optional<SimTime> contact_personnel(const PersonnelModel& person, SimTime t, RngStream& rng);

struct ContactAttempt {
  int level = 0;  // 1-based
  NodeId personnel = 0;
  SimTime contacted_at;
  std::optional<SimTime> answered_at;
  bool accepted = false;  // answered inside the wait window
};

struct ResponseOutcome {
  SimTime verdict_time;
  DisasterClass cls = DisasterClass::None;
  NodeId site = 0;
  NodeId gateway = -1;
  SimTime gateway_found_at;
  int gateway_lookups = 0;
  std::optional<int> declared_by;  // level number; nullopt means fallback alarm
  SimTime declared_at;
  std::vector<ContactAttempt> attempts;

  /// "level-N" or "fallback".
  std::string declared_by_label() const;
  /// Compact per-level log, e.g. "1:7:silent|2:12:accepted@14.200".
  std::string attempts_label() const;
};

/// Locates a gateway provider on behalf of `origin`, reporting exactly once.
using GatewayLocator =
    std::function<void(NodeId origin, std::function<void(const DiscoveryOutcome&)>)>;

GatewayLocator gateway_locator(ServiceDiscovery& discovery, std::string service = "gateway");

struct ResponseTiming {
  SimTime level_wait = SimTime::from_ms(10000);
  SimTime gateway_retry = SimTime::from_ms(5000);
};

/// Call-tree escalation. On a disaster verdict: find a gateway (retrying
/// until one is found), then call each level in turn, waiting level_wait
/// for an answer. The first answer inside its window declares the disaster;
/// if every level stays silent the fallback alarm fires right after the
/// last wait. Late answers are logged and ignored.
class ResponseCoordinator {
 public:
  using Sink = std::function<void(const ResponseOutcome&)>;

  ResponseCoordinator(Simulator& sim, GatewayLocator locator, CallTree tree,
                      std::vector<PersonnelModel> personnel, ResponseTiming timing,
                      std::uint64_t seed);

  /// Throws PreconditionViolation when the verdict class is None.
  void initiate(const DisasterVerdict& verdict, NodeId site, Sink done = {});

  const std::vector<ResponseOutcome>& outcomes() const { return completed_; }
  std::size_t active() const { return active_; }

 private:
  struct Escalation {
    ResponseOutcome outcome;
    Sink done;
  };

  void locate(std::size_t idx);
  void contact(std::size_t idx, std::size_t level);
  void declare(std::size_t idx, std::optional<int> level);

  Simulator& sim_;
  GatewayLocator locator_;
  CallTree tree_;
  std::vector<PersonnelModel> personnel_;
  ResponseTiming timing_;
  std::map<NodeId, RngStream> rngs_;
  std::vector<Escalation> escalations_;
  std::vector<ResponseOutcome> completed_;
  std::size_t active_ = 0;
};

}  // namespace crahn
