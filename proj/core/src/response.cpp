#include "crahn/response.hpp"

#include <algorithm>
#include <set>

#include "crahn/error.hpp"

namespace crahn {

void CallTree::validate() const {
  if (levels.empty()) throw Error(ErrorCode::PreconditionViolation, "call tree has no levels");
  std::set<NodeId> seen;
  for (NodeId n : levels) {
    if (!seen.insert(n).second) {
      throw Error(ErrorCode::PreconditionViolation,
                  "node " + std::to_string(n) + " appears twice in the call tree");
    }
  }
}

std::optional<SimTime> contact_personnel(const PersonnelModel& person, SimTime t, RngStream& rng) {
  if (!rng.bernoulli(person.respond_prob)) return std::nullopt;
  const std::int64_t lo = person.delay_min.ms();
  const std::int64_t hi = person.delay_max.ms();
  const std::int64_t delay =
      hi > lo ? lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo) + 1))
              : lo;
  return t + SimTime::from_ms(delay);
}

std::string ResponseOutcome::declared_by_label() const {
  return declared_by ? "level-" + std::to_string(*declared_by) : "fallback";
}

std::string ResponseOutcome::attempts_label() const {
  std::string out;
  for (const auto& a : attempts) {
    if (!out.empty()) out += '|';
    out += std::to_string(a.level) + ":" + std::to_string(a.personnel) + ":";
    if (!a.answered_at) {
      out += "silent";
    } else {
      out += (a.accepted ? "accepted@" : "late@") + a.answered_at->str();
    }
  }
  return out;
}

GatewayLocator gateway_locator(ServiceDiscovery& discovery, std::string service) {
  return [&discovery, service](NodeId origin, std::function<void(const DiscoveryOutcome&)> cb) {
    discovery.discover(origin, service, std::move(cb));
  };
}

ResponseCoordinator::ResponseCoordinator(Simulator& sim, GatewayLocator locator, CallTree tree,
                                         std::vector<PersonnelModel> personnel,
                                         ResponseTiming timing, std::uint64_t seed)
    : sim_(sim),
      locator_(std::move(locator)),
      tree_(std::move(tree)),
      personnel_(std::move(personnel)),
      timing_(timing) {
  tree_.validate();
  if (personnel_.size() != tree_.levels.size()) {
    throw Error(ErrorCode::PreconditionViolation, "one personnel model is needed per level");
  }
  for (NodeId n : tree_.levels) rngs_.emplace(n, RngStream(seed, "personnel/" + std::to_string(n)));
}

void ResponseCoordinator::initiate(const DisasterVerdict& verdict, NodeId site, Sink done) {
  if (verdict.cls == DisasterClass::None) {
    throw Error(ErrorCode::PreconditionViolation, "no response for a verdict of class none");
  }
  ResponseOutcome o;
  o.verdict_time = sim_.now();
  o.cls = verdict.cls;
  o.site = site;
  escalations_.push_back(Escalation{std::move(o), std::move(done)});
  ++active_;
  locate(escalations_.size() - 1);
}

void ResponseCoordinator::locate(std::size_t idx) {
  auto& e = escalations_[idx];
  ++e.outcome.gateway_lookups;
  locator_(e.outcome.site, [this, idx](const DiscoveryOutcome& found) {
    if (!found.found()) {
      sim_.schedule(sim_.now() + timing_.gateway_retry, [this, idx] { locate(idx); },
                    EventKind::Response);
      return;
    }
    auto& esc = escalations_[idx];
    esc.outcome.gateway = found.provider;
    esc.outcome.gateway_found_at = sim_.now();
    contact(idx, 0);
  });
}

void ResponseCoordinator::contact(std::size_t idx, std::size_t level) {
  if (level == tree_.levels.size()) {
    declare(idx, std::nullopt);
    return;
  }
  const SimTime now = sim_.now();
  const PersonnelModel& person = personnel_[level];
  ContactAttempt attempt{static_cast<int>(level) + 1, tree_.levels[level], now, std::nullopt, false};
  attempt.answered_at = contact_personnel(person, now, rngs_.at(tree_.levels[level]));
  const SimTime deadline = now + timing_.level_wait;
  attempt.accepted = attempt.answered_at && *attempt.answered_at <= deadline;
  escalations_[idx].outcome.attempts.push_back(attempt);

  if (attempt.accepted) {
    const int lvl = attempt.level;
    sim_.schedule(*attempt.answered_at, [this, idx, lvl] { declare(idx, lvl); },
                  EventKind::Response, attempt.personnel);
  } else {
    sim_.schedule(deadline, [this, idx, level] { contact(idx, level + 1); }, EventKind::Response,
                  attempt.personnel);
  }
}

void ResponseCoordinator::declare(std::size_t idx, std::optional<int> level) {
  auto& e = escalations_[idx];
  e.outcome.declared_by = level;
  e.outcome.declared_at = sim_.now();
  completed_.push_back(e.outcome);
  --active_;
  if (e.done) {
    auto done = std::move(e.done);
    const ResponseOutcome outcome = completed_.back();
    done(outcome);
  }
}

}  // namespace crahn
