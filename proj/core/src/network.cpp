#include "crahn/network.hpp"

#include "crahn/error.hpp"

namespace crahn {

Network::Network(Simulator& sim, std::vector<RandomWaypoint> nodes, LinkParams link,
                 RngStream link_rng)
    : sim_(sim), nodes_(std::move(nodes)), link_(link), rng_(std::move(link_rng)) {}

void Network::refresh(SimTime t) {
  if (cached_at_ == t.ms()) return;
  cached_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) cached_[i] = nodes_[i].position_at(t);
  cached_at_ = t.ms();
}

Vec2 Network::position(NodeId node, SimTime t) {
  refresh(t);
  return cached_.at(node);
}

std::vector<NodeId> Network::neighbors(NodeId node, SimTime t) {
  refresh(t);
  std::vector<NodeId> out;
  const Vec2 self = cached_.at(node);
  for (int j = 0; j < size(); ++j) {
    if (j != node && within_range(self, cached_[j], link_.range_m)) out.push_back(j);
  }
  return out;
}

bool Network::are_neighbors(NodeId a, NodeId b, SimTime t) {
  refresh(t);
  return a != b && within_range(cached_.at(a), cached_.at(b), link_.range_m);
}

SimTime Network::draw_delay() {
  if (link_.jitter_max.ms() <= 0) return link_.hop_delay;
  const auto jitter = static_cast<std::int64_t>(
      rng_.below(static_cast<std::uint64_t>(link_.jitter_max.ms()) + 1));
  return link_.hop_delay + SimTime::from_ms(jitter);
}

void Network::send(NodeId from, NodeId to, Payload payload) {
  if (!are_neighbors(from, to, sim_.now())) {
    throw Error(ErrorCode::NotANeighbor, "node " + std::to_string(to) +
                                             " is not a neighbor of " + std::to_string(from));
  }
  ++sent_;
  sim_.schedule(
      sim_.now() + draw_delay(),
      [this, from, to, p = std::move(payload)] {
        if (!are_neighbors(from, to, sim_.now())) {
          ++dropped_out_of_range_;
          return;
        }
        ++delivered_;
        for (const auto& r : receivers_) r(to, from, p);
      },
      EventKind::Delivery, to);
}

std::size_t Network::broadcast(NodeId from, const Payload& payload) {
  const auto targets = neighbors(from, sim_.now());
  for (NodeId to : targets) send(from, to, payload);
  return targets.size();
}

// ---------------------------------------------------------------------------

SituationService::SituationService(Network& net) : net_(net), stores_(net.size()) {
  net_.add_receiver([this](NodeId to, NodeId from, const Payload& p) {
    if (const auto* g = std::get_if<SituationGossip>(&p)) receive(to, from, *g);
  });
}

void SituationService::publish(NodeId node, const SituationRecord& rec) {
  if (!stores_.at(node).insert(node, rec)) {
    ++duplicates_;
    return;
  }
  published_.push_back(Published{node, rec});
  net_.broadcast(node, SituationGossip{node, rec});
}

void SituationService::receive(NodeId to, NodeId /*from*/, const SituationGossip& msg) {
  if (!stores_.at(to).insert(msg.origin, msg.record)) {
    ++duplicates_;
    return;
  }
  net_.broadcast(to, msg);
}

}  // namespace crahn
