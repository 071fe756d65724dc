#include "crahn/discovery.hpp"

#include <algorithm>

namespace crahn {

std::string_view to_string(DiscoveryStatus s) {
  switch (s) {
    case DiscoveryStatus::Local: return "local";
    case DiscoveryStatus::Cache: return "cache";
    case DiscoveryStatus::Found: return "found";
    case DiscoveryStatus::NotFound: return "not_found";
  }
  return "not_found";
}

DiscoveryParams DiscoveryParams::from(const NetParams& p) {
  DiscoveryParams d;
  d.advert_period = seconds(p.advert_period_s);
  d.cache_ttl = seconds(p.cache_ttl_s);
  d.route_ttl = seconds(p.route_ttl_s);
  d.ttl_hops = p.ttl_hops;
  d.timeout = seconds(p.discovery_timeout_s);
  d.retries = p.discovery_retries;
  return d;
}

std::uint64_t FloodAudit::max_forwards() const {
  std::uint64_t m = 0;
  for (const auto& [key, n] : forwards) m = std::max(m, n);
  return m;
}

ServiceDiscovery::ServiceDiscovery(Network& net, DiscoveryParams params,
                                   std::vector<std::vector<std::string>> hosted)
    : net_(net), params_(params), nodes_(net.size()) {
  for (std::size_t i = 0; i < nodes_.size() && i < hosted.size(); ++i) {
    nodes_[i].services = std::move(hosted[i]);
  }
  net_.add_receiver([this](NodeId to, NodeId from, const Payload& p) { receive(to, from, p); });
}

bool ServiceDiscovery::hosts(NodeId node, std::string_view service) const {
  const auto& s = nodes_.at(node).services;
  return std::find(s.begin(), s.end(), service) != s.end();
}

// --- adverts ----------------------------------------------------------------

void ServiceDiscovery::start_adverts(SimTime until, RngStream& phase_rng) {
  Simulator& sim = net_.sim();
  for (NodeId n = 0; n < static_cast<NodeId>(nodes_.size()); ++n) {
    if (nodes_[n].services.empty()) continue;
    const SimTime first =
        sim.now() + SimTime::from_ms(static_cast<std::int64_t>(
                        phase_rng.below(static_cast<std::uint64_t>(params_.advert_period.ms()))));
    if (first > until) continue;
    sim.schedule(first, [this, n, until] { advert_loop(n, until); }, EventKind::Advert, n);
  }
}

void ServiceDiscovery::advert_loop(NodeId node, SimTime until) {
  advertise(node);
  Simulator& sim = net_.sim();
  const SimTime next = sim.now() + params_.advert_period;
  if (next <= until) {
    sim.schedule(next, [this, node, until] { advert_loop(node, until); }, EventKind::Advert, node);
  }
}

void ServiceDiscovery::advertise(NodeId node) {
  auto& st = nodes_.at(node);
  ++st.advert_seq;
  for (const auto& svc : st.services) net_.broadcast(node, Advert{node, svc, st.advert_seq});
}

void ServiceDiscovery::cache_advert(NodeId node, const Advert& a, NodeId from) {
  on_advert(node, from, a);
}

void ServiceDiscovery::on_advert(NodeId to, NodeId from, const Advert& a) {
  const SimTime now = net_.sim().now();
  auto& cache = nodes_.at(to).cache;
  const auto key = std::make_pair(a.provider, a.service);
  auto it = cache.find(key);
  if (it != cache.end() && it->second.seq >= a.seq && it->second.expires_at >= now) {
    ++stale_adverts_;
    return;
  }
  cache[key] = ServiceAdvert{a.provider, a.service, a.seq, now + params_.cache_ttl};
  if (from == a.provider) install_route(to, a.provider, from, 1);
}

std::optional<ServiceAdvert> ServiceDiscovery::cache_lookup(NodeId node, std::string_view service,
                                                            SimTime now) const {
  for (const auto& [key, ad] : nodes_.at(node).cache) {
    if (ad.service != service || ad.expires_at < now) continue;
    if (route(node, ad.provider, now) == nullptr) continue;
    return ad;  // map order: lowest provider id first
  }
  return std::nullopt;
}

// --- routes -------------------------------------------------------------------

void ServiceDiscovery::install_route(NodeId at, NodeId destination, NodeId next_hop, int hops) {
  if (at == destination) return;
  const SimTime now = net_.sim().now();
  nodes_.at(at).routes[destination] =
      RouteEntry{destination, next_hop, std::max(1, hops), now, now + params_.route_ttl};
}

const RouteEntry* ServiceDiscovery::route(NodeId node, NodeId destination, SimTime now) const {
  const auto& routes = nodes_.at(node).routes;
  auto it = routes.find(destination);
  if (it == routes.end() || it->second.expires_at < now) return nullptr;
  return &it->second;
}

std::optional<int> ServiceDiscovery::follow_route(NodeId node, NodeId destination,
                                                  SimTime now) const {
  int hops = 0;
  NodeId cur = node;
  while (cur != destination) {
    const RouteEntry* rt = route(cur, destination, now);
    if (rt == nullptr || hops > static_cast<int>(nodes_.size())) return std::nullopt;
    cur = rt->next_hop;
    ++hops;
  }
  return hops;
}

// --- discovery ----------------------------------------------------------------

void ServiceDiscovery::discover(NodeId origin, const std::string& service, Callback done) {
  Simulator& sim = net_.sim();
  const std::size_t idx = pending_.size();
  Pending p;
  p.outcome.origin = origin;
  p.outcome.service = service;
  p.outcome.issued_at = sim.now();
  p.done = std::move(done);

  if (hosts(origin, service)) {
    p.outcome.status = DiscoveryStatus::Local;
    p.outcome.provider = origin;
  } else if (auto hit = cache_lookup(origin, service, sim.now())) {
    p.outcome.status = DiscoveryStatus::Cache;
    p.outcome.provider = hit->provider;
  }
  const bool immediate = p.outcome.provider >= 0;
  pending_.push_back(std::move(p));
  if (immediate) {
    sim.schedule(sim.now(), [this, idx] { resolve(idx); }, EventKind::Discovery, origin);
  } else {
    flood(idx);
  }
}

void ServiceDiscovery::flood(std::size_t idx) {
  Pending& p = pending_[idx];
  const NodeId origin = p.outcome.origin;
  auto& st = nodes_.at(origin);
  const std::uint64_t rid = st.next_request_id++;
  p.request_id = rid;
  ++p.outcome.attempts;
  by_request_[{origin, rid}] = idx;
  st.seen.insert({origin, rid});
  transmit_request(origin, ServiceRequest{origin, rid, p.outcome.service, params_.ttl_hops, 1});
  Simulator& sim = net_.sim();
  sim.schedule(sim.now() + params_.timeout, [this, idx, rid] { on_timeout(idx, rid); },
               EventKind::Timeout, origin);
}

void ServiceDiscovery::on_timeout(std::size_t idx, std::uint64_t request_id) {
  Pending& p = pending_[idx];
  if (p.resolved || p.request_id != request_id) return;
  if (p.outcome.attempts <= params_.retries) {
    flood(idx);
    return;
  }
  p.outcome.status = DiscoveryStatus::NotFound;
  p.outcome.provider = -1;
  p.outcome.hops = 0;
  resolve(idx);
}

void ServiceDiscovery::resolve(std::size_t idx) {
  Pending& p = pending_[idx];
  if (p.resolved) return;
  p.resolved = true;
  p.outcome.resolved_at = net_.sim().now();
  outcomes_.push_back(p.outcome);
  if (p.done) {
    // The callback may start new discoveries, which can reallocate pending_.
    auto done = std::move(p.done);
    const DiscoveryOutcome outcome = p.outcome;
    done(outcome);
  }
}

void ServiceDiscovery::transmit_request(NodeId from, const ServiceRequest& r) {
  if (r.ttl_hops < 1) ++audit_.ttl_violations;
  ++audit_.forwards[{r.origin, r.request_id}];
  net_.broadcast(from, r);
}

void ServiceDiscovery::receive(NodeId to, NodeId from, const Payload& p) {
  if (const auto* a = std::get_if<Advert>(&p)) {
    on_advert(to, from, *a);
  } else if (const auto* rq = std::get_if<ServiceRequest>(&p)) {
    on_request(to, from, *rq);
  } else if (const auto* rp = std::get_if<ServiceReply>(&p)) {
    on_reply(to, from, *rp);
  }
}

void ServiceDiscovery::on_request(NodeId to, NodeId from, const ServiceRequest& r) {
  auto& st = nodes_.at(to);
  if (!st.seen.insert({r.origin, r.request_id}).second) {
    ++duplicate_requests_;
    return;
  }
  install_route(to, r.origin, from, r.hop_count);
  const SimTime now = net_.sim().now();

  if (hosts(to, r.service)) {
    if (!net_.are_neighbors(to, from, now)) {
      ++reply_no_route_;
      return;
    }
    net_.send(to, from, ServiceReply{to, r.origin, r.request_id, r.service, 1});
    return;
  }
  if (r.ttl_hops - 1 < 1) {
    ++ttl_exhausted_;
    return;
  }
  ServiceRequest fwd = r;
  --fwd.ttl_hops;
  ++fwd.hop_count;
  transmit_request(to, fwd);
}

void ServiceDiscovery::on_reply(NodeId to, NodeId from, const ServiceReply& r) {
  install_route(to, r.provider, from, r.hop_count);
  if (to == r.origin) {
    auto it = by_request_.find({r.origin, r.request_id});
    if (it == by_request_.end()) return;
    Pending& p = pending_[it->second];
    if (p.resolved) return;
    p.outcome.status = DiscoveryStatus::Found;
    p.outcome.provider = r.provider;
    p.outcome.hops = r.hop_count;
    resolve(it->second);
    return;
  }
  const SimTime now = net_.sim().now();
  const RouteEntry* back = route(to, r.origin, now);
  if (back == nullptr || !net_.are_neighbors(to, back->next_hop, now)) {
    ++reply_no_route_;
    return;
  }
  ServiceReply fwd = r;
  ++fwd.hop_count;
  net_.send(to, back->next_hop, fwd);
}

}  // namespace crahn
