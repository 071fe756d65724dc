#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "crahn/geometry.hpp"
#include "crahn/mobility.hpp"
#include "crahn/rng.hpp"
#include "crahn/sim_time.hpp"
#include "crahn/simulator.hpp"
#include "crahn/situation.hpp"

namespace crahn {

struct Advert {
  NodeId provider = 0;
  std::string service;
  std::uint64_t seq = 0;
};

struct ServiceRequest {
  NodeId origin = 0;
  std::uint64_t request_id = 0;
  std::string service;
  int ttl_hops = 0;   // remaining hops, >= 1 on every transmitted copy
  int hop_count = 0;  // hops travelled on arrival
};

struct ServiceReply {
  NodeId provider = 0;
  NodeId origin = 0;
  std::uint64_t request_id = 0;
  std::string service;
  int hop_count = 0;  // hops from the provider on arrival
};

struct SituationGossip {
  NodeId origin = 0;
  SituationRecord record;
};

using Payload = std::variant<Advert, ServiceRequest, ServiceReply, SituationGossip>;

struct LinkParams {
  double range_m = 250.0;
  SimTime hop_delay = SimTime::from_ms(10);
  SimTime jitter_max = SimTime::from_ms(50);
};

/// Common control channel between mobile nodes. Every hop is delayed by
/// hop_delay plus uniform jitter; a delivery is dropped if the receiver has
/// left radio range by the time it arrives.
class Network {
 public:
  using Receiver = std::function<void(NodeId to, NodeId from, const Payload&)>;

  Network(Simulator& sim, std::vector<RandomWaypoint> nodes, LinkParams link, RngStream link_rng);

  int size() const { return static_cast<int>(nodes_.size()); }
  Simulator& sim() { return sim_; }
  const LinkParams& link() const { return link_; }

  Vec2 position(NodeId node, SimTime t);
  /// Nodes within range of `node` at t (inclusive), ascending id, excluding self.
  std::vector<NodeId> neighbors(NodeId node, SimTime t);
  bool are_neighbors(NodeId a, NodeId b, SimTime t);

  /// Unicast over one hop. Throws NotANeighbor.
  void send(NodeId from, NodeId to, Payload payload);
  /// One copy to every current neighbor; returns how many were sent.
  std::size_t broadcast(NodeId from, const Payload& payload);

  void add_receiver(Receiver r) { receivers_.push_back(std::move(r)); }

  std::uint64_t sent() const { return sent_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t dropped_out_of_range() const { return dropped_out_of_range_; }

 private:
  SimTime draw_delay();
  void refresh(SimTime t);

  Simulator& sim_;
  std::vector<RandomWaypoint> nodes_;
  LinkParams link_;
  RngStream rng_;
  std::vector<Receiver> receivers_;
  std::vector<Vec2> cached_;
  std::int64_t cached_at_ = -1;
  std::uint64_t sent_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_out_of_range_ = 0;
};

/// Single re-broadcast gossip of situation records with duplicate
/// suppression keyed by (origin, timestamp).
class SituationService {
 public:
  explicit SituationService(Network& net);

  /// Stores locally and broadcasts to neighbors.
  void publish(NodeId node, const SituationRecord& rec);

  const SituationStore& store(NodeId node) const { return stores_.at(node); }
  std::uint64_t duplicates_suppressed() const { return duplicates_; }

  struct Published {
    NodeId origin;
    SituationRecord record;
  };
  const std::vector<Published>& published() const { return published_; }

 private:
  void receive(NodeId to, NodeId from, const SituationGossip& msg);

  Network& net_;
  std::vector<SituationStore> stores_;
  std::vector<Published> published_;
  std::uint64_t duplicates_ = 0;
};

}  // namespace crahn
