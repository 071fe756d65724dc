#include "crahn/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>

#include "crahn/error.hpp"
#include "crahn/mobility.hpp"
#include "crahn/network.hpp"

namespace crahn {

namespace {

MobilityBounds bounds_of(const ScenarioConfig& cfg) {
  return MobilityBounds{cfg.area_width_m, cfg.area_height_m, cfg.net.v_min, cfg.net.v_max,
                        cfg.net.pause_s};
}

// Fisher-Yates prefix: k distinct values from [0, n).
std::vector<int> pick_distinct(int n, int k, RngStream& rng) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  k = std::min(k, n);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  return ids;
}

SituationRecord routine_record(NodeId node, Vec2 at, SimTime now, RngStream& rng) {
  const double u = rng.uniform01();
  SituationRecord rec;
  rec.location = {std::round(at.x * 1000.0) / 1000.0, std::round(at.y * 1000.0) / 1000.0};
  rec.timestamp = now;
  if (u < 0.7) {
    rec.status = SituationStatus::Green;
    rec.short_msg = "ok";
  } else if (u < 0.9) {
    rec.status = SituationStatus::Yellow;
    rec.short_msg = "caution";
  } else {
    rec.status = SituationStatus::Red;
    rec.short_msg = "help";
  }
  rec.detail_msg = "status report from node " + std::to_string(node);
  return rec;
}

}  // namespace

std::vector<std::vector<std::string>> assign_services(const ScenarioConfig& cfg,
                                                      std::uint64_t seed) {
  std::vector<std::vector<std::string>> hosted(cfg.num_su);
  RngStream rng(seed, "services/placement");
  for (const auto& svc : cfg.net.services) {
    for (int node : pick_distinct(cfg.num_su, cfg.net.providers_per_service, rng)) {
      hosted[node].push_back(svc);
    }
  }
  return hosted;
}

TrainResult train_spectrum_manager(const ScenarioConfig& cfg,
                                   const std::vector<PrimaryUser>& pus, std::uint64_t seed,
                                   std::size_t* trainset_size) {
  const auto& sp = cfg.spectrum;
  const int nodes = std::min(sp.warmup_trace_nodes, std::max(cfg.num_su, 1));
  Dataset data;
  for (int i = 0; i < nodes; ++i) {
    auto walker =
        RandomWaypoint::random(bounds_of(cfg), RngStream(seed, "warmup/mobility/" + std::to_string(i)));
    RngStream sense_rng(seed, "warmup/sense/" + std::to_string(i));
    const PositionFn pos = [&walker](int, SimTime t) { return walker.position_at(t); };
    const auto trace = record_occupancy_trace(i, pos, pus, cfg, seconds(sp.warmup_s), sense_rng);
    auto part = build_spectrum_trainset(trace, seconds(sp.window_s), seconds(sp.horizon_s),
                                        seconds(sp.trainset_stride_s));
    data.insert(data.end(), std::make_move_iterator(part.begin()),
                std::make_move_iterator(part.end()));
  }
  if (trainset_size != nullptr) *trainset_size = data.size();
  RngStream init_rng(seed, "spectrum/init");
  return train(Mlp(3, sp.n_hidden, 1), data, sp.train, init_rng);
}

RunResult run_simulation(const ScenarioConfig& cfg) {
  validate(cfg);
  const std::uint64_t seed = cfg.master_seed;
  const SimTime until = seconds(cfg.sim_duration_s);
  const auto& toggles = cfg.scenarios;

  RunResult out;
  out.config = cfg;
  out.hosted = assign_services(cfg, seed);

  // --- offline phase ---------------------------------------------------------
  const auto pus = make_primary_users(cfg, seed);
  ChannelSelector selector = heuristic_selector();
  if (toggles.spectrum && cfg.spectrum.selector == "ann") {
    auto trained = train_spectrum_manager(cfg, pus, seed, &out.spectrum_trainset_size);
    out.spectrum_mse_history = std::move(trained.mse_history);
    out.spectrum_manager = trained.net;
    selector = ann_selector(std::move(trained.net));
  }
  if (toggles.detection) {
    if (!cfg.detection.model_path.empty()) {
      out.detector = load_model(cfg.detection.model_path);
      if (out.detector->n_in != cfg.detection.n_groups || out.detector->n_out != kNumClasses) {
        throw Error(ErrorCode::DimensionMismatch, "detector model does not match detection.n_groups");
      }
    } else {
      auto trained = train_detector_model(cfg.detection, seed);
      out.detector_mse_history = std::move(trained.mse_history);
      out.detector = std::move(trained.net);
    }
  }

  // --- main run ----------------------------------------------------------------
  Simulator sim;
  std::vector<RandomWaypoint> walkers;
  walkers.reserve(cfg.num_su);
  for (int i = 0; i < cfg.num_su; ++i) {
    walkers.push_back(RandomWaypoint::random(bounds_of(cfg),
                                             RngStream(seed, "mobility/" + std::to_string(i))));
  }
  LinkParams link{cfg.radio_range_m, seconds(cfg.net.hop_delay_s), seconds(cfg.net.jitter_max_s)};
  Network net(sim, std::move(walkers), link, RngStream(seed, "link"));
  ServiceDiscovery discovery(net, DiscoveryParams::from(cfg.net), out.hosted);
  SituationService situation(net);

  std::optional<SpectrumField> spectrum;
  if (toggles.spectrum) {
    spectrum.emplace(sim, cfg, pus, [&net](int n, SimTime t) { return net.position(n, t); },
                     selector, seed);
    spectrum->start(until);
  }

  std::optional<ResponseCoordinator> response;
  if (toggles.response) {
    RngStream tree_rng(seed, "response/calltree");
    CallTree tree{pick_distinct(cfg.num_su, cfg.response.levels, tree_rng)};
    out.call_tree = tree.levels;
    std::vector<PersonnelModel> personnel;
    for (NodeId n : tree.levels) {
      personnel.push_back(PersonnelModel{n, cfg.response.respond_prob,
                                         seconds(cfg.response.response_delay_min_s),
                                         seconds(cfg.response.response_delay_max_s)});
    }
    response.emplace(sim, gateway_locator(discovery), std::move(tree), std::move(personnel),
                     ResponseTiming{seconds(cfg.response.level_wait_s),
                                    seconds(cfg.response.gateway_retry_s)},
                     seed);
  }

  std::optional<DetectionSite> site;
  const NodeId site_node = cfg.response.site_node;
  bool alarm_raised = false;
  if (toggles.detection) {
    RngStream events_rng(seed, "detection/events");
    auto truth = schedule_events(cfg.detection.num_events, seconds(cfg.detection.event_duration_s),
                                 until, events_rng);
    site.emplace(sim, *out.detector, GeneratorConfig::from(cfg.detection),
                 seconds(cfg.detection.snapshot_interval_s), std::move(truth),
                 RngStream(seed, "detection/sensors"), site_node);
    site->on_verdict([&](const DisasterVerdict& v) {
      const bool positive = v.cls != DisasterClass::None;
      // Escalate on the rising edge of an alarm episode only.
      if (positive && !alarm_raised && response) {
        response->initiate(v, site_node, [&, site_node](const ResponseOutcome& o) {
          if (!toggles.situation) return;
          SituationRecord rec;
          const Vec2 p = net.position(site_node, sim.now());
          rec.location = {std::round(p.x * 1000.0) / 1000.0, std::round(p.y * 1000.0) / 1000.0};
          rec.status = SituationStatus::Red;
          rec.timestamp = sim.now();
          rec.short_msg = "disaster";
          rec.detail_msg = std::string(to_string(o.cls)) + " declared by " + o.declared_by_label();
          situation.publish(site_node, rec);
        });
      }
      alarm_raised = positive;
    });
    site->start(until);
  }

  std::vector<RngStream> workload;
  if (toggles.discovery || toggles.situation) {
    for (int i = 0; i < cfg.num_su; ++i) {
      workload.emplace_back(seed, "workload/" + std::to_string(i));
    }
  }

  // Periodic per-node workloads; the closures live until the loop returns.
  const SimTime lookup_period = seconds(cfg.net.discovery_interval_s);
  const SimTime gossip_period = seconds(cfg.net.situation_period_s);
  std::function<void(NodeId)> issue = [&](NodeId n) {
    const auto& svc = cfg.net.services[workload[n].below(cfg.net.services.size())];
    discovery.discover(n, svc);
    if (sim.now() + lookup_period <= until) {
      sim.schedule(sim.now() + lookup_period, [&issue, n] { issue(n); }, EventKind::Discovery, n);
    }
  };
  std::function<void(NodeId)> gossip = [&](NodeId n) {
    situation.publish(n, routine_record(n, net.position(n, sim.now()), sim.now(), workload[n]));
    if (sim.now() + gossip_period <= until) {
      sim.schedule(sim.now() + gossip_period, [&gossip, n] { gossip(n); }, EventKind::Situation, n);
    }
  };
  const auto first_at = [&](NodeId n, SimTime period) {
    return SimTime::from_ms(
        static_cast<std::int64_t>(workload[n].below(static_cast<std::uint64_t>(period.ms())) + 1));
  };

  if (toggles.discovery && !cfg.net.services.empty()) {
    RngStream advert_phase(seed, "adverts/phase");
    discovery.start_adverts(until, advert_phase);
    for (int n = 0; n < cfg.num_su; ++n) {
      const SimTime first = first_at(n, lookup_period);
      if (first <= until) sim.schedule(first, [&issue, n] { issue(n); }, EventKind::Discovery, n);
    }
  }
  if (toggles.situation) {
    for (int n = 0; n < cfg.num_su; ++n) {
      const SimTime first = first_at(n, gossip_period);
      if (first <= until) sim.schedule(first, [&gossip, n] { gossip(n); }, EventKind::Situation, n);
    }
  }
  out.events_processed = sim.run_until(until);

  // --- collect -------------------------------------------------------------------
  if (spectrum) {
    spectrum->finish();
    out.switches = spectrum->ledger().records();
    out.tx_violations = spectrum->audit().violations();
    out.tx_checks = spectrum->audit().checks();
    out.spectrum_deferrals = spectrum->deferrals();
    out.spectrum_vacates = spectrum->vacates();
    out.spectrum_pending = spectrum->pending_switches();
  }
  if (site) {
    out.truth = site->truth();
    out.verdicts = site->verdicts();
  }
  if (response) {
    out.responses = response->outcomes();
    out.responses_pending = response->active();
  }
  out.discoveries = discovery.outcomes();
  out.max_flood_forwards = discovery.flood_audit().max_forwards();
  out.ttl_violations = discovery.flood_audit().ttl_violations;

  out.drops["out_of_range"] = net.dropped_out_of_range();
  out.drops["duplicate_request"] = discovery.duplicate_requests();
  out.drops["ttl_exhausted"] = discovery.ttl_exhausted();
  out.drops["reply_no_route"] = discovery.reply_no_route();
  out.drops["stale_advert"] = discovery.stale_adverts();
  out.drops["duplicate_situation"] = situation.duplicates_suppressed();

  for (const auto& p : situation.published()) {
    int holders = 0;
    for (int n = 0; n < net.size(); ++n) {
      if (situation.store(n).contains(p.origin, p.record.timestamp)) ++holders;
    }
    out.situations.push_back(SituationSpread{p.origin, p.record, holders});
  }
  return out;
}

}  // namespace crahn
