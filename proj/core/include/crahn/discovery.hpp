#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crahn/config.hpp"
#include "crahn/network.hpp"

namespace crahn {

struct ServiceAdvert {
  NodeId provider = 0;
  std::string service;
  std::uint64_t seq = 0;
  SimTime expires_at;
};

struct RouteEntry {
  NodeId destination = 0;
  NodeId next_hop = 0;
  int hop_count = 1;
  SimTime installed_at;
  SimTime expires_at;
};

enum class DiscoveryStatus { Local, Cache, Found, NotFound };
std::string_view to_string(DiscoveryStatus s);

struct DiscoveryOutcome {
  NodeId origin = 0;
  std::string service;
  SimTime issued_at;
  SimTime resolved_at;
  DiscoveryStatus status = DiscoveryStatus::NotFound;
  NodeId provider = -1;
  int hops = 0;
  int attempts = 0;

  bool found() const { return status != DiscoveryStatus::NotFound; }
  SimTime latency() const { return resolved_at - issued_at; }
};

struct DiscoveryParams {
  SimTime advert_period = SimTime::from_ms(5000);
  SimTime cache_ttl = SimTime::from_ms(15000);
  SimTime route_ttl = SimTime::from_ms(15000);
  int ttl_hops = 10;
  SimTime timeout = SimTime::from_ms(10000);
  int retries = 1;

  static DiscoveryParams from(const NetParams& p);
};

/// Per-flood bookkeeping used to check that floods terminate.
struct FloodAudit {
  std::map<std::pair<NodeId, std::uint64_t>, std::uint64_t> forwards;  // transmissions per request
  std::uint64_t ttl_violations = 0;  // copies transmitted with ttl < 1
  std::uint64_t max_forwards() const;
};

/// Proactive one-hop service adverts with local caching, plus AODV-style
/// on-demand discovery: requests flood with a hop limit and install reverse
/// routes, the hosting provider replies along the reverse path, and the
/// reply installs forward routes back to the provider.
class ServiceDiscovery {
 public:
  using Callback = std::function<void(const DiscoveryOutcome&)>;

  /// hosted[n] lists the services node n provides.
  ServiceDiscovery(Network& net, DiscoveryParams params,
                   std::vector<std::vector<std::string>> hosted);

  /// Every hosting node advertises once per period from a random phase.
  void start_adverts(SimTime until, RngStream& phase_rng);
  /// One advert round from `node` right now.
  void advertise(NodeId node);

  /// Resolves asynchronously; the callback always fires exactly once.
  void discover(NodeId origin, const std::string& service, Callback done = {});

  bool hosts(NodeId node, std::string_view service) const;
  /// Fresh cache entry for `service` whose provider has a live route.
  std::optional<ServiceAdvert> cache_lookup(NodeId node, std::string_view service,
                                            SimTime now) const;
  /// Unexpired route, or nullptr.
  const RouteEntry* route(NodeId node, NodeId destination, SimTime now) const;
  /// Hops needed to reach `destination` by following next_hop entries from
  /// `node`, or nullopt if the chain breaks or loops.
  std::optional<int> follow_route(NodeId node, NodeId destination, SimTime now) const;

  /// Injects an advert into `node`'s cache as if it had just arrived.
  void cache_advert(NodeId node, const Advert& advert, NodeId from);

  const std::vector<DiscoveryOutcome>& outcomes() const { return outcomes_; }
  const FloodAudit& flood_audit() const { return audit_; }

  std::uint64_t duplicate_requests() const { return duplicate_requests_; }
  std::uint64_t ttl_exhausted() const { return ttl_exhausted_; }
  std::uint64_t reply_no_route() const { return reply_no_route_; }
  std::uint64_t stale_adverts() const { return stale_adverts_; }

 private:
  struct NodeState {
    std::vector<std::string> services;
    std::map<std::pair<NodeId, std::string>, ServiceAdvert, std::less<>> cache;
    std::map<NodeId, RouteEntry> routes;
    std::set<std::pair<NodeId, std::uint64_t>> seen;
    std::uint64_t advert_seq = 0;
    std::uint64_t next_request_id = 0;
  };
  struct Pending {
    DiscoveryOutcome outcome;
    Callback done;
    std::uint64_t request_id = 0;
    bool resolved = false;
  };

  void receive(NodeId to, NodeId from, const Payload& p);
  void on_advert(NodeId to, NodeId from, const Advert& a);
  void on_request(NodeId to, NodeId from, const ServiceRequest& r);
  void on_reply(NodeId to, NodeId from, const ServiceReply& r);
  void flood(std::size_t pending_index);
  void on_timeout(std::size_t pending_index, std::uint64_t request_id);
  void resolve(std::size_t pending_index);
  void install_route(NodeId at, NodeId destination, NodeId next_hop, int hops);
  void transmit_request(NodeId from, const ServiceRequest& r);
  void advert_loop(NodeId node, SimTime until);

  Network& net_;
  DiscoveryParams params_;
  std::vector<NodeState> nodes_;
  std::vector<Pending> pending_;
  std::map<std::pair<NodeId, std::uint64_t>, std::size_t> by_request_;
  std::vector<DiscoveryOutcome> outcomes_;
  FloodAudit audit_;
  std::uint64_t duplicate_requests_ = 0;
  std::uint64_t ttl_exhausted_ = 0;
  std::uint64_t reply_no_route_ = 0;
  std::uint64_t stale_adverts_ = 0;
};

}  // namespace crahn
