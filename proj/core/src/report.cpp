#include "crahn/report.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "crahn/error.hpp"
#include "crahn/rng.hpp"
#include "crahn/situation.hpp"

namespace crahn {

namespace fs = std::filesystem;

std::string format_number(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

std::string fmt_time(SimTime t) { return t.str(); }

std::string fmt_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  CsvWriter() = default;
  explicit CsvWriter(std::initializer_list<std::string_view> header) { row(header); }

  template <typename Range>
  void row(const Range& cells) {
    bool first = true;
    for (const auto& c : cells) {
      if (!first) buf_ << ',';
      buf_ << csv_field(std::string(c));
      first = false;
    }
    buf_ << '\n';
  }
  void row(std::initializer_list<std::string_view> cells) { row<decltype(cells)>(cells); }
  void row(std::initializer_list<std::string> cells) { row<decltype(cells)>(cells); }

  void save(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out << buf_.str();
    if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
  }

 private:
  std::ostringstream buf_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "cannot create output directory '" + dir.string() + "'");
  }
}

double ms_mean_s(std::int64_t sum_ms, std::size_t n) {
  return n == 0 ? 0.0 : static_cast<double>(sum_ms) / static_cast<double>(n) / 1000.0;
}

void write_training_curve(const std::vector<double>& history, const fs::path& path) {
  CsvWriter csv{"epoch", "mse"};
  for (std::size_t i = 0; i < history.size(); ++i) {
    csv.row({std::to_string(i + 1), format_number(history[i])});
  }
  csv.save(path);
}

}  // namespace

double RunReport::metric(const std::string& name) const {
  for (const auto& [k, v] : metrics)
    if (k == name) return v;
  throw Error(ErrorCode::PreconditionViolation, "no metric named '" + name + "'");
}

RunReport summarize(const RunResult& run) {
  RunReport r;
  r.config_digest = config_digest(run.config);
  r.seed = run.config.master_seed;

  r.false_negative_rate = false_negative_rate(run.truth, run.verdicts);
  r.false_positive_rate = false_positive_rate(run.truth, run.verdicts);

  std::int64_t switch_ms = 0;
  std::map<int, std::int64_t> su_ms;
  for (const auto& s : run.switches) {
    switch_ms += s.switching_time().ms();
    su_ms[s.su_id] += s.switching_time().ms();
    ++r.switch_stats[s.su_id].switches;
  }
  for (auto& [su, st] : r.switch_stats) st.mean_switch_time_s = ms_mean_s(su_ms[su], st.switches);
  r.mean_switch_time_s = ms_mean_s(switch_ms, run.switches.size());

  std::int64_t found_ms = 0;
  std::size_t found = 0;
  std::map<NodeId, std::int64_t> node_ms;
  for (const auto& d : run.discoveries) {
    auto& st = r.latency_stats[d.origin];
    ++st.issued;
    if (d.found()) {
      ++st.found;
      ++found;
      found_ms += d.latency().ms();
      node_ms[d.origin] += d.latency().ms();
    }
  }
  for (auto& [n, st] : r.latency_stats) st.mean_latency_s = ms_mean_s(node_ms[n], st.found);
  r.mean_discovery_latency_s = ms_mean_s(found_ms, found);
  r.discovery_success_rate =
      run.discoveries.empty() ? 0.0 : static_cast<double>(found) / run.discoveries.size();

  r.drops = run.drops;

  std::set<std::string> registered;
  for (const auto& h : run.hosted) registered.insert(h.begin(), h.end());

  std::size_t declared = 0, fallback = 0;
  std::int64_t declare_ms = 0;
  for (const auto& o : run.responses) {
    (o.declared_by ? declared : fallback) += 1;
    declare_ms += (o.declared_at - o.verdict_time).ms();
  }

  std::int64_t holders = 0;
  for (const auto& s : run.situations) holders += s.holders;

  auto& m = r.metrics;
  const auto add = [&m](const char* name, double v) { m.emplace_back(name, v); };
  add("num_pu", run.config.num_pu);
  add("num_su", run.config.num_su);
  add("services_registered", static_cast<double>(registered.size()));
  add("detection_events", static_cast<double>(run.truth.size()));
  add("verdicts", static_cast<double>(run.verdicts.size()));
  add("false_negative_rate", r.false_negative_rate);
  add("false_positive_rate", r.false_positive_rate);
  add("switches", static_cast<double>(run.switches.size()));
  add("mean_switch_time_s", r.mean_switch_time_s);
  add("spectrum_vacates", static_cast<double>(run.spectrum_vacates));
  add("spectrum_pending", static_cast<double>(run.spectrum_pending));
  add("spectrum_deferrals", static_cast<double>(run.spectrum_deferrals));
  add("tx_checks", static_cast<double>(run.tx_checks));
  add("tx_violations", static_cast<double>(run.tx_violations));
  add("discoveries", static_cast<double>(run.discoveries.size()));
  add("discoveries_found", static_cast<double>(found));
  add("discovery_success_rate", r.discovery_success_rate);
  add("mean_discovery_latency_s", r.mean_discovery_latency_s);
  add("max_flood_forwards", static_cast<double>(run.max_flood_forwards));
  add("ttl_violations", static_cast<double>(run.ttl_violations));
  add("responses_declared", static_cast<double>(declared));
  add("responses_fallback", static_cast<double>(fallback));
  add("responses_pending", static_cast<double>(run.responses_pending));
  add("mean_declaration_delay_s", ms_mean_s(declare_ms, run.responses.size()));
  add("situations_published", static_cast<double>(run.situations.size()));
  add("mean_situation_holders",
      run.situations.empty() ? 0.0 : static_cast<double>(holders) / run.situations.size());
  add("events_processed", static_cast<double>(run.events_processed));
  for (const auto& [cause, n] : run.drops) m.emplace_back("drops_" + cause, static_cast<double>(n));
  return r;
}

void write_run(const RunResult& run, const RunReport& report, const fs::path& out_dir) {
  ensure_dir(out_dir);
  write_text(out_dir / "config.resolved.json", to_json(run.config));

  {
    CsvWriter csv{"metric", "value"};
    csv.row({std::string("config_digest"), report.config_digest});
    csv.row({std::string("seed"), std::to_string(report.seed)});
    for (const auto& [k, v] : report.metrics) csv.row({k, format_number(v)});
    csv.save(out_dir / "report.csv");
  }
  {
    CsvWriter csv{"su_id", "pu_appeared_at", "resumed_at", "switching_time", "from_channel",
                  "to_channel"};
    for (const auto& s : run.switches) {
      csv.row({std::to_string(s.su_id), fmt_time(s.pu_appeared_at), fmt_time(s.resumed_at),
               fmt_time(s.switching_time()), std::to_string(s.from_channel),
               std::to_string(s.to_channel)});
    }
    csv.save(out_dir / "switches.csv");
  }
  {
    CsvWriter csv{"su_id", "switches", "mean_switch_time_s"};
    for (const auto& [su, st] : report.switch_stats) {
      csv.row({std::to_string(su), std::to_string(st.switches), format_number(st.mean_switch_time_s)});
    }
    csv.save(out_dir / "switch_stats.csv");
  }
  {
    CsvWriter csv{"origin", "service", "issued_at", "resolved_at", "latency", "hops", "outcome"};
    for (const auto& d : run.discoveries) {
      csv.row({std::to_string(d.origin), d.service, fmt_time(d.issued_at), fmt_time(d.resolved_at),
               fmt_time(d.latency()), std::to_string(d.hops), std::string(to_string(d.status))});
    }
    csv.save(out_dir / "discoveries.csv");
  }
  {
    CsvWriter csv{"origin", "issued", "found", "mean_latency_s"};
    for (const auto& [n, st] : report.latency_stats) {
      csv.row({std::to_string(n), std::to_string(st.issued), std::to_string(st.found),
               format_number(st.mean_latency_s)});
    }
    csv.save(out_dir / "discovery_stats.csv");
  }
  {
    CsvWriter csv{"cause", "count"};
    for (const auto& [cause, n] : run.drops) csv.row({cause, std::to_string(n)});
    csv.save(out_dir / "drops.csv");
  }
  {
    CsvWriter csv{"verdict_time", "gateway_found_at", "declared_by", "declared_at", "attempts"};
    for (const auto& o : run.responses) {
      csv.row({fmt_time(o.verdict_time), fmt_time(o.gateway_found_at), o.declared_by_label(),
               fmt_time(o.declared_at), o.attempts_label()});
    }
    csv.save(out_dir / "responses.csv");
  }
  {
    CsvWriter csv{"class", "start", "end"};
    for (const auto& e : run.truth) {
      csv.row({std::string(to_string(e.cls)), fmt_time(e.start), fmt_time(e.start + e.duration)});
    }
    csv.save(out_dir / "detection_events.csv");
  }
  {
    CsvWriter csv{"at", "class", "truth", "score_none", "score_fire", "score_earthquake",
                  "score_flood"};
    for (const auto& v : run.verdicts) {
      DisasterClass truth = DisasterClass::None;
      for (const auto& e : run.truth)
        if (e.covers(v.at)) truth = e.cls;
      std::vector<std::string> cells{fmt_time(v.at), std::string(to_string(v.cls)),
                                     std::string(to_string(truth))};
      for (double s : v.scores) cells.push_back(fmt_score(s));
      csv.row(cells);
    }
    csv.save(out_dir / "verdicts.csv");
  }
  {
    CsvWriter csv{"origin", "timestamp", "status", "holders", "xml"};
    for (const auto& s : run.situations) {
      csv.row({std::to_string(s.origin), fmt_time(s.record.timestamp),
               std::string(to_string(s.record.status)), std::to_string(s.holders),
               encode_situation(s.record)});
    }
    csv.save(out_dir / "situations.csv");
  }
  if (run.detector) {
    write_text(out_dir / "detector.json", to_json(*run.detector));
    if (!run.detector_mse_history.empty()) {
      write_training_curve(run.detector_mse_history, out_dir / "detector_training.csv");
    }
  }
  if (run.spectrum_manager) {
    write_text(out_dir / "spectrum_manager.json", to_json(*run.spectrum_manager));
    write_training_curve(run.spectrum_mse_history, out_dir / "spectrum_training.csv");
  }
}

RunReport run_scenario(const ScenarioConfig& cfg, const fs::path& out_dir) {
  validate(cfg);
  ensure_dir(out_dir);
  const RunResult run = run_simulation(cfg);
  RunReport report = summarize(run);
  write_run(run, report, out_dir);
  return report;
}

// ---------------------------------------------------------------------------

void SweepSpec::validate() const {
  if (parameter.empty()) throw Error(ErrorCode::ConfigInvalid, "sweep parameter is empty");
  if (values.empty()) throw Error(ErrorCode::ConfigInvalid, "sweep values are empty");
  if (repeats < 1) throw Error(ErrorCode::ConfigInvalid, "sweep repeats must be >= 1");
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const fs::path& out_dir, int jobs) {
  spec.validate();
  ensure_dir(out_dir);

  struct Job {
    ScenarioConfig cfg;
    fs::path dir;
  };
  std::vector<Job> work;
  std::vector<SweepRow> rows;
  for (double v : spec.values) {
    for (int r = 0; r < spec.repeats; ++r) {
      ScenarioConfig cfg = with_override(spec.base, spec.parameter, v);
      cfg.master_seed = derive_seed(spec.base.master_seed, "repeat/" + std::to_string(r));
      work.push_back({cfg, out_dir / "runs" / ("value-" + format_number(v)) /
                               ("repeat-" + std::to_string(r))});
      rows.push_back(SweepRow{v, r, cfg.master_seed, {}});
    }
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  const auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      try {
        rows[i].report = run_scenario(work[i].cfg, work[i].dir);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(work.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  const auto& names = rows.front().report.metrics;
  {
    std::vector<std::string> header{"value", "repeat", "seed"};
    for (const auto& [k, v] : names) header.push_back(k);
    CsvWriter csv;
    csv.row(header);
    for (const auto& row : rows) {
      std::vector<std::string> cells{format_number(row.value), std::to_string(row.repeat),
                                     std::to_string(row.seed)};
      for (const auto& [k, v] : names) cells.push_back(format_number(row.report.metric(k)));
      csv.row(cells);
    }
    csv.save(out_dir / "sweep.csv");
  }
  {
    std::vector<std::string> header{"value", "runs"};
    for (const auto& [k, v] : names) {
      header.push_back(k + "_mean");
      header.push_back(k + "_stddev");
    }
    CsvWriter csv;
    csv.row(header);
    for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
      const auto first = rows.begin() + static_cast<std::ptrdiff_t>(vi * spec.repeats);
      std::vector<std::string> cells{format_number(spec.values[vi]), std::to_string(spec.repeats)};
      for (const auto& [k, unused] : names) {
        double sum = 0.0;
        for (auto it = first; it != first + spec.repeats; ++it) sum += it->report.metric(k);
        const double mean = sum / spec.repeats;
        double ss = 0.0;
        for (auto it = first; it != first + spec.repeats; ++it) {
          const double d = it->report.metric(k) - mean;
          ss += d * d;
        }
        const double sd = spec.repeats > 1 ? std::sqrt(ss / (spec.repeats - 1)) : 0.0;
        cells.push_back(format_number(mean));
        cells.push_back(format_number(sd));
      }
      csv.row(cells);
    }
    csv.save(out_dir / "sweep_summary.csv");
  }
  return rows;
}

// ---------------------------------------------------------------------------

DetectorTraining train_detector(const DetectionParams& params, std::uint64_t seed,
                                const fs::path& model_path, const fs::path& report_path) {
  auto trained = train_detector_model(params, seed);
  DetectorTraining out{trained.net, std::move(trained.mse_history), {}};
  RngStream heldout_rng(seed, "detection/heldout");
  out.heldout = evaluate_detector(out.net, GeneratorConfig::from(params), heldout_rng);
  save_model(out.net, model_path.string());
  write_training_curve(out.mse_history, report_path);
  return out;
}

}  // namespace crahn
