#include "crahn/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "crahn/error.hpp"
#include "crahn/rng.hpp"
#include "json.hpp"

namespace crahn {

using nlohmann::json;

namespace {

json train_to_json(const TrainConfig& t) {
  return json{{"learning_rate", t.learning_rate},
              {"max_epochs", t.max_epochs},
              {"target_mse", t.target_mse},
              {"init_scale", t.init_scale}};
}

void train_from_json(const json& j, TrainConfig& t) {
  t.learning_rate = j.at("learning_rate").get<double>();
  t.max_epochs = j.at("max_epochs").get<int>();
  t.target_mse = j.at("target_mse").get<double>();
  t.init_scale = j.at("init_scale").get<double>();
}

json to_json_object(const ScenarioConfig& c) {
  json j;
  j["area_width_m"] = c.area_width_m;
  j["area_height_m"] = c.area_height_m;
  j["num_pu"] = c.num_pu;
  j["num_su"] = c.num_su;
  j["num_channels"] = c.num_channels;
  j["band_label"] = c.band_label;
  j["radio_range_m"] = c.radio_range_m;
  j["sim_duration_s"] = c.sim_duration_s;
  j["master_seed"] = c.master_seed;
  j["scenarios"] = {{"detection", c.scenarios.detection},
                    {"spectrum", c.scenarios.spectrum},
                    {"discovery", c.scenarios.discovery},
                    {"response", c.scenarios.response},
                    {"situation", c.scenarios.situation}};
  const auto& d = c.detection;
  j["detection"] = {{"n_groups", d.n_groups},
                    {"n_hidden", d.n_hidden},
                    {"sensors_per_kind", d.sensors_per_kind},
                    {"noise_sigma", d.noise_sigma},
                    {"samples_per_class", d.samples_per_class},
                    {"snapshot_interval_s", d.snapshot_interval_s},
                    {"num_events", d.num_events},
                    {"event_duration_s", d.event_duration_s},
                    {"signatures",
                     {{"none", d.sig_none},
                      {"fire", d.sig_fire},
                      {"earthquake", d.sig_earthquake},
                      {"flood", d.sig_flood}}},
                    {"train", train_to_json(d.train)},
                    {"model_path", d.model_path}};
  const auto& s = c.spectrum;
  j["spectrum"] = {{"sensing_interval_s", s.sensing_interval_s},
                   {"pu_period_s", s.pu_period_s},
                   {"pu_on_fraction", s.pu_on_fraction},
                   {"retune_delay_s", s.retune_delay_s},
                   {"window_s", s.window_s},
                   {"p_miss", s.p_miss},
                   {"p_false", s.p_false},
                   {"selector", s.selector},
                   {"warmup_s", s.warmup_s},
                   {"warmup_trace_nodes", s.warmup_trace_nodes},
                   {"trainset_stride_s", s.trainset_stride_s},
                   {"horizon_s", s.horizon_s},
                   {"n_hidden", s.n_hidden},
                   {"train", train_to_json(s.train)}};
  const auto& n = c.net;
  j["net"] = {{"v_min", n.v_min},
              {"v_max", n.v_max},
              {"pause_s", n.pause_s},
              {"hop_delay_s", n.hop_delay_s},
              {"jitter_max_s", n.jitter_max_s},
              {"advert_period_s", n.advert_period_s},
              {"cache_ttl_s", n.cache_ttl_s},
              {"route_ttl_s", n.route_ttl_s},
              {"ttl_hops", n.ttl_hops},
              {"discovery_timeout_s", n.discovery_timeout_s},
              {"discovery_retries", n.discovery_retries},
              {"services", n.services},
              {"providers_per_service", n.providers_per_service},
              {"discovery_interval_s", n.discovery_interval_s},
              {"situation_period_s", n.situation_period_s}};
  const auto& r = c.response;
  j["response"] = {{"levels", r.levels},
                   {"respond_prob", r.respond_prob},
                   {"response_delay_min_s", r.response_delay_min_s},
                   {"response_delay_max_s", r.response_delay_max_s},
                   {"level_wait_s", r.level_wait_s},
                   {"gateway_retry_s", r.gateway_retry_s},
                   {"site_node", r.site_node}};
  return j;
}

ScenarioConfig from_json_object(const json& j) {
  ScenarioConfig c;
  c.area_width_m = j.at("area_width_m").get<double>();
  c.area_height_m = j.at("area_height_m").get<double>();
  c.num_pu = j.at("num_pu").get<int>();
  c.num_su = j.at("num_su").get<int>();
  c.num_channels = j.at("num_channels").get<int>();
  c.band_label = j.at("band_label").get<std::string>();
  c.radio_range_m = j.at("radio_range_m").get<double>();
  c.sim_duration_s = j.at("sim_duration_s").get<double>();
  c.master_seed = j.at("master_seed").get<std::uint64_t>();

  const auto& sc = j.at("scenarios");
  c.scenarios.detection = sc.at("detection").get<bool>();
  c.scenarios.spectrum = sc.at("spectrum").get<bool>();
  c.scenarios.discovery = sc.at("discovery").get<bool>();
  c.scenarios.response = sc.at("response").get<bool>();
  c.scenarios.situation = sc.at("situation").get<bool>();

  const auto& d = j.at("detection");
  c.detection.n_groups = d.at("n_groups").get<int>();
  c.detection.n_hidden = d.at("n_hidden").get<int>();
  c.detection.sensors_per_kind = d.at("sensors_per_kind").get<int>();
  c.detection.noise_sigma = d.at("noise_sigma").get<double>();
  c.detection.samples_per_class = d.at("samples_per_class").get<int>();
  c.detection.snapshot_interval_s = d.at("snapshot_interval_s").get<double>();
  c.detection.num_events = d.at("num_events").get<int>();
  c.detection.event_duration_s = d.at("event_duration_s").get<double>();
  const auto& sig = d.at("signatures");
  c.detection.sig_none = sig.at("none").get<Signature>();
  c.detection.sig_fire = sig.at("fire").get<Signature>();
  c.detection.sig_earthquake = sig.at("earthquake").get<Signature>();
  c.detection.sig_flood = sig.at("flood").get<Signature>();
  train_from_json(d.at("train"), c.detection.train);
  c.detection.model_path = d.at("model_path").get<std::string>();

  const auto& s = j.at("spectrum");
  c.spectrum.sensing_interval_s = s.at("sensing_interval_s").get<double>();
  c.spectrum.pu_period_s = s.at("pu_period_s").get<double>();
  c.spectrum.pu_on_fraction = s.at("pu_on_fraction").get<double>();
  c.spectrum.retune_delay_s = s.at("retune_delay_s").get<double>();
  c.spectrum.window_s = s.at("window_s").get<double>();
  c.spectrum.p_miss = s.at("p_miss").get<double>();
  c.spectrum.p_false = s.at("p_false").get<double>();
  c.spectrum.selector = s.at("selector").get<std::string>();
  c.spectrum.warmup_s = s.at("warmup_s").get<double>();
  c.spectrum.warmup_trace_nodes = s.at("warmup_trace_nodes").get<int>();
  c.spectrum.trainset_stride_s = s.at("trainset_stride_s").get<double>();
  c.spectrum.horizon_s = s.at("horizon_s").get<double>();
  c.spectrum.n_hidden = s.at("n_hidden").get<int>();
  train_from_json(s.at("train"), c.spectrum.train);

  const auto& n = j.at("net");
  c.net.v_min = n.at("v_min").get<double>();
  c.net.v_max = n.at("v_max").get<double>();
  c.net.pause_s = n.at("pause_s").get<double>();
  c.net.hop_delay_s = n.at("hop_delay_s").get<double>();
  c.net.jitter_max_s = n.at("jitter_max_s").get<double>();
  c.net.advert_period_s = n.at("advert_period_s").get<double>();
  c.net.cache_ttl_s = n.at("cache_ttl_s").get<double>();
  c.net.route_ttl_s = n.at("route_ttl_s").get<double>();
  c.net.ttl_hops = n.at("ttl_hops").get<int>();
  c.net.discovery_timeout_s = n.at("discovery_timeout_s").get<double>();
  c.net.discovery_retries = n.at("discovery_retries").get<int>();
  c.net.services = n.at("services").get<std::vector<std::string>>();
  c.net.providers_per_service = n.at("providers_per_service").get<int>();
  c.net.discovery_interval_s = n.at("discovery_interval_s").get<double>();
  c.net.situation_period_s = n.at("situation_period_s").get<double>();

  const auto& r = j.at("response");
  c.response.levels = r.at("levels").get<int>();
  c.response.respond_prob = r.at("respond_prob").get<double>();
  c.response.response_delay_min_s = r.at("response_delay_min_s").get<double>();
  c.response.response_delay_max_s = r.at("response_delay_max_s").get<double>();
  c.response.level_wait_s = r.at("level_wait_s").get<double>();
  c.response.gateway_retry_s = r.at("gateway_retry_s").get<double>();
  c.response.site_node = r.at("site_node").get<int>();
  return c;
}

bool same_kind(const json& def, const json& given) {
  if (def.is_boolean()) return given.is_boolean();
  if (def.is_string()) return given.is_string();
  if (def.is_array()) return given.is_array();
  if (def.is_number_unsigned()) return given.is_number_unsigned();
  if (def.is_number_integer()) return given.is_number_integer();
  if (def.is_number()) return given.is_number();
  return false;
}

// Overlays `given` onto the defaults in `base`, rejecting unknown keys and
// type changes.
void overlay(json& base, const json& given, const std::string& path) {
  if (!given.is_object()) {
    throw Error(ErrorCode::ConfigInvalid, "expected an object at '" + path + "'");
  }
  for (auto it = given.begin(); it != given.end(); ++it) {
    const std::string field = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) {
      throw Error(ErrorCode::ConfigInvalid, "unknown field '" + field + "'");
    }
    json& slot = base[it.key()];
    if (slot.is_object()) {
      overlay(slot, it.value(), field);
    } else if (!same_kind(slot, it.value())) {
      throw Error(ErrorCode::ConfigInvalid, "field '" + field + "' has the wrong type");
    } else {
      slot = it.value();
    }
  }
}

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw Error(ErrorCode::ConfigInvalid, std::string("field '") + field + "' " + what);
}

bool is_unit(const Signature& s) {
  for (double v : s)
    if (!(v >= 0.0 && v <= 1.0)) return false;
  return true;
}

void validate_train(const TrainConfig& t, const char* lr, const char* ep, const char* mse) {
  require(t.learning_rate > 0.0, lr, "must be > 0");
  require(t.max_epochs >= 1, ep, "must be >= 1");
  require(t.target_mse >= 0.0, mse, "must be >= 0");
}

}  // namespace

void validate(const ScenarioConfig& c) {
  require(c.area_width_m > 0.0, "area_width_m", "must be > 0");
  require(c.area_height_m > 0.0, "area_height_m", "must be > 0");
  require(c.num_pu >= 0, "num_pu", "must be >= 0");
  require(c.num_su >= 0, "num_su", "must be >= 0");
  require(c.num_channels >= 1, "num_channels", "must be >= 1");
  require(c.radio_range_m > 0.0, "radio_range_m", "must be > 0");
  require(c.sim_duration_s > 0.0, "sim_duration_s", "must be > 0");
  require(!c.scenarios.any() || c.num_su >= 1, "num_su",
          "must be >= 1 when any protocol scenario is enabled");

  const auto& d = c.detection;
  require(d.n_groups >= 1, "detection.n_groups", "must be >= 1");
  require(d.n_hidden >= 1, "detection.n_hidden", "must be >= 1");
  require(d.sensors_per_kind >= 1, "detection.sensors_per_kind", "must be >= 1");
  require(d.n_groups <= d.sensors_per_kind * kSensorKinds, "detection.n_groups",
          "must not exceed the number of sensors");
  require(d.noise_sigma >= 0.0, "detection.noise_sigma", "must be >= 0");
  require(d.samples_per_class >= 1, "detection.samples_per_class", "must be >= 1");
  require(d.snapshot_interval_s > 0.0, "detection.snapshot_interval_s", "must be > 0");
  require(d.num_events >= 0, "detection.num_events", "must be >= 0");
  require(d.event_duration_s > 0.0, "detection.event_duration_s", "must be > 0");
  require(!c.scenarios.detection || d.num_events * d.event_duration_s < c.sim_duration_s, "detection.num_events",
          "events do not fit in sim_duration_s");
  require(is_unit(d.sig_none) && is_unit(d.sig_fire) && is_unit(d.sig_earthquake) &&
              is_unit(d.sig_flood),
          "detection.signatures", "entries must lie in [0,1]");
  validate_train(d.train, "detection.train.learning_rate", "detection.train.max_epochs",
                 "detection.train.target_mse");

  const auto& s = c.spectrum;
  require(s.sensing_interval_s >= 0.001, "spectrum.sensing_interval_s", "must be >= 0.001");
  require(s.pu_period_s >= 0.001, "spectrum.pu_period_s", "must be > 0");
  require(s.pu_on_fraction > 0.0 && s.pu_on_fraction < 1.0, "spectrum.pu_on_fraction",
          "must lie in (0,1)");
  require(s.retune_delay_s >= 0.0, "spectrum.retune_delay_s", "must be >= 0");
  require(s.window_s > 0.0, "spectrum.window_s", "must be > 0");
  require(s.p_miss >= 0.0 && s.p_miss <= 1.0, "spectrum.p_miss", "must lie in [0,1]");
  require(s.p_false >= 0.0 && s.p_false <= 1.0, "spectrum.p_false", "must lie in [0,1]");
  require(s.selector == "ann" || s.selector == "heuristic", "spectrum.selector",
          "must be 'ann' or 'heuristic'");
  require(s.warmup_s >= 0.0, "spectrum.warmup_s", "must be >= 0");
  require(!c.scenarios.spectrum || s.selector != "ann" ||
              s.warmup_s >= 2.0 * s.window_s + s.horizon_s,
          "spectrum.warmup_s", "must cover two windows plus one horizon to train the manager");
  require(s.warmup_trace_nodes >= 1, "spectrum.warmup_trace_nodes", "must be >= 1");
  require(s.trainset_stride_s > 0.0, "spectrum.trainset_stride_s", "must be > 0");
  require(s.horizon_s > 0.0, "spectrum.horizon_s", "must be > 0");
  require(s.n_hidden >= 1, "spectrum.n_hidden", "must be >= 1");
  validate_train(s.train, "spectrum.train.learning_rate", "spectrum.train.max_epochs",
                 "spectrum.train.target_mse");

  const auto& n = c.net;
  require(n.v_min > 0.0, "net.v_min", "must be > 0");
  require(n.v_max >= n.v_min, "net.v_max", "must be >= net.v_min");
  require(n.pause_s >= 0.0, "net.pause_s", "must be >= 0");
  require(n.hop_delay_s >= 0.0, "net.hop_delay_s", "must be >= 0");
  require(n.jitter_max_s >= 0.0, "net.jitter_max_s", "must be >= 0");
  require(n.advert_period_s > 0.0, "net.advert_period_s", "must be > 0");
  require(n.cache_ttl_s >= 0.0, "net.cache_ttl_s", "must be >= 0");
  require(n.route_ttl_s >= 0.0, "net.route_ttl_s", "must be >= 0");
  require(n.ttl_hops >= 1, "net.ttl_hops", "must be >= 1");
  require(n.discovery_timeout_s > 0.0, "net.discovery_timeout_s", "must be > 0");
  require(n.discovery_retries >= 0, "net.discovery_retries", "must be >= 0");
  require(n.providers_per_service >= 0, "net.providers_per_service", "must be >= 0");
  require(n.discovery_interval_s > 0.0, "net.discovery_interval_s", "must be > 0");
  require(n.situation_period_s > 0.0, "net.situation_period_s", "must be > 0");

  const auto& r = c.response;
  require(r.levels >= 1, "response.levels", "must be >= 1");
  require(r.levels <= c.num_su || !c.scenarios.response, "response.levels",
          "must not exceed num_su");
  require(r.respond_prob >= 0.0 && r.respond_prob <= 1.0, "response.respond_prob",
          "must lie in [0,1]");
  require(r.response_delay_min_s >= 0.0, "response.response_delay_min_s", "must be >= 0");
  require(r.response_delay_max_s >= r.response_delay_min_s, "response.response_delay_max_s",
          "must be >= response_delay_min_s");
  require(r.level_wait_s > 0.0, "response.level_wait_s", "must be > 0");
  require(r.gateway_retry_s > 0.0, "response.gateway_retry_s", "must be > 0");
  require(r.site_node >= 0 && (r.site_node < c.num_su || c.num_su == 0), "response.site_node",
          "must name an existing node");
}

ScenarioConfig load_config(std::string_view json_text) {
  json given;
  try {
    given = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigParse, e.what());
  }
  json merged = to_json_object(ScenarioConfig{});
  overlay(merged, given, "");
  ScenarioConfig cfg;
  try {
    cfg = from_json_object(merged);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, e.what());
  }
  validate(cfg);
  return cfg;
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config(buf.str());
}

ScenarioConfig with_override(const ScenarioConfig& cfg, std::string_view path, double value) {
  json merged = to_json_object(cfg);
  json* slot = &merged;
  std::string_view rest = path;
  while (true) {
    const auto dot = rest.find('.');
    const std::string key(rest.substr(0, dot));
    if (!slot->is_object() || !slot->contains(key)) {
      throw Error(ErrorCode::ConfigInvalid, "unknown field '" + std::string(path) + "'");
    }
    slot = &(*slot)[key];
    if (dot == std::string_view::npos) break;
    rest = rest.substr(dot + 1);
  }
  if (slot->is_number_integer()) {
    if (value != std::floor(value)) {
      throw Error(ErrorCode::ConfigInvalid, "field '" + std::string(path) + "' takes an integer");
    }
    if (slot->is_number_unsigned()) {
      if (value < 0) throw Error(ErrorCode::ConfigInvalid, "field '" + std::string(path) + "' must be >= 0");
      *slot = static_cast<std::uint64_t>(value);
    } else {
      *slot = static_cast<std::int64_t>(value);
    }
  } else if (slot->is_number()) {
    *slot = value;
  } else {
    throw Error(ErrorCode::ConfigInvalid, "field '" + std::string(path) + "' is not numeric");
  }
  ScenarioConfig out;
  try {
    out = from_json_object(merged);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, e.what());
  }
  validate(out);
  return out;
}

std::string to_json(const ScenarioConfig& cfg) { return to_json_object(cfg).dump(2) + "\n"; }

std::string config_digest(const ScenarioConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json_object(cfg).dump())));
  return buf;
}

}  // namespace crahn
