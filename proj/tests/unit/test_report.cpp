#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crahn/error.hpp"
#include "crahn/report.hpp"
#include "crahn/rng.hpp"
#include "json.hpp"

using namespace crahn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path dir = fs::temp_directory_path() / "crahn_tests" /
                 (std::string(info ? info->name() : "suite") + "_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

using Table = std::vector<std::map<std::string, std::string>>;

// Plain comma splitting; the files read here never quote fields.
Table read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> header;
  Table rows;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!l.empty() && l.back() == ',') out.emplace_back();
    return out;
  };
  if (std::getline(in, line)) header = split(line);
  while (std::getline(in, line)) {
    const auto cells = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

double num(const std::string& s) { return std::stod(s); }

std::map<std::string, std::string> read_report(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (auto& row : read_csv(dir / "report.csv")) out[row["metric"]] = row["value"];
  return out;
}

void expect_same_tree(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
  }
  std::size_t count_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) count_b += e.is_regular_file();
  ASSERT_EQ(files.size(), count_b);
  for (const auto& f : files) {
    ASSERT_TRUE(fs::exists(b / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

class DefaultRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() / "crahn_tests" / "default_run");
    fs::remove_all(*dir_);
    report_ = new RunReport(run_scenario(ScenarioConfig{}, *dir_));
  }
  static void TearDownTestSuite() {
    delete dir_;
    delete report_;
  }
  static fs::path* dir_;
  static RunReport* report_;
};

fs::path* DefaultRun::dir_ = nullptr;
RunReport* DefaultRun::report_ = nullptr;

}  // namespace

TEST(FormatNumber, Examples) {
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(1.5), "1.5");
  EXPECT_EQ(format_number(3), "3");
  EXPECT_EQ(format_number(0.1), "0.1");
}

TEST_F(DefaultRun, WritesEveryLedger) {
  for (const char* f :
       {"config.resolved.json", "report.csv", "switches.csv", "switch_stats.csv", "discoveries.csv",
        "discovery_stats.csv", "drops.csv", "responses.csv", "detection_events.csv",
        "verdicts.csv", "situations.csv", "detector.json", "detector_training.csv",
        "spectrum_manager.json", "spectrum_training.csv"}) {
    EXPECT_TRUE(fs::exists(*dir_ / f)) << f;
  }
}

TEST_F(DefaultRun, ResolvedConfigEchoesPopulation) {
  const auto j = nlohmann::json::parse(slurp(*dir_ / "config.resolved.json"));
  EXPECT_EQ(j.at("num_pu").get<int>(), 5);
  EXPECT_EQ(j.at("num_su").get<int>(), 50);
  EXPECT_EQ(j.at("net").at("services").size(), 10u);
  const auto report = read_report(*dir_);
  EXPECT_EQ(report.at("num_pu"), "5");
  EXPECT_EQ(report.at("num_su"), "50");
  EXPECT_EQ(report.at("services_registered"), "10");
  EXPECT_EQ(report.at("config_digest"), config_digest(ScenarioConfig{}));
  EXPECT_EQ(report.at("seed"), "1");
}

TEST_F(DefaultRun, SwitchMeansMatchLedger) {
  const auto rows = read_csv(*dir_ / "switches.csv");
  ASSERT_FALSE(rows.empty());
  double sum = 0;
  std::map<std::string, std::pair<double, int>> per_su;
  for (auto row : rows) {
    const double t = num(row["switching_time"]);
    EXPECT_NEAR(t, num(row["resumed_at"]) - num(row["pu_appeared_at"]), 1e-9);
    sum += t;
    per_su[row["su_id"]].first += t;
    ++per_su[row["su_id"]].second;
  }
  const auto report = read_report(*dir_);
  EXPECT_NEAR(num(report.at("mean_switch_time_s")), sum / rows.size(), 1e-9);
  EXPECT_EQ(num(report.at("switches")), static_cast<double>(rows.size()));
  for (auto row : read_csv(*dir_ / "switch_stats.csv")) {
    const auto& [s, n] = per_su.at(row["su_id"]);
    EXPECT_EQ(std::stoi(row["switches"]), n);
    EXPECT_NEAR(num(row["mean_switch_time_s"]), s / n, 1e-9);
  }
}

TEST_F(DefaultRun, DiscoveryMeansMatchLedger) {
  const auto rows = read_csv(*dir_ / "discoveries.csv");
  ASSERT_FALSE(rows.empty());
  double sum = 0;
  int found = 0;
  std::map<std::string, std::tuple<int, int, double>> per_node;
  for (auto row : rows) {
    auto& [issued, ok, lat] = per_node[row["origin"]];
    ++issued;
    EXPECT_NEAR(num(row["latency"]), num(row["resolved_at"]) - num(row["issued_at"]), 1e-9);
    if (row["outcome"] != "not_found") {
      ++found;
      ++ok;
      sum += num(row["latency"]);
      lat += num(row["latency"]);
    }
  }
  const auto report = read_report(*dir_);
  EXPECT_NEAR(num(report.at("mean_discovery_latency_s")), sum / found, 1e-9);
  EXPECT_NEAR(num(report.at("discovery_success_rate")), static_cast<double>(found) / rows.size(),
              1e-9);
  EXPECT_NEAR(report_->mean_discovery_latency_s, sum / found, 1e-9);
  for (auto row : read_csv(*dir_ / "discovery_stats.csv")) {
    const auto& [issued, ok, lat] = per_node.at(row["origin"]);
    EXPECT_EQ(std::stoi(row["issued"]), issued);
    EXPECT_EQ(std::stoi(row["found"]), ok);
    EXPECT_NEAR(num(row["mean_latency_s"]), ok ? lat / ok : 0.0, 1e-9);
  }
}

TEST_F(DefaultRun, DetectionRatesMatchLedger) {
  struct Ev {
    double start, end;
  };
  std::vector<Ev> events;
  for (auto row : read_csv(*dir_ / "detection_events.csv")) {
    events.push_back({num(row["start"]), num(row["end"])});
  }
  const auto verdicts = read_csv(*dir_ / "verdicts.csv");
  ASSERT_EQ(events.size(), 10u);
  const auto covers = [](const Ev& e, double t) { return t >= e.start - 1e-9 && t <= e.end + 1e-9; };
  int missed = 0;
  for (const auto& e : events) {
    bool hit = false;
    for (auto v : verdicts) hit |= v["class"] != "none" && covers(e, num(v["at"]));
    missed += !hit;
  }
  int quiet = 0, alarms = 0;
  for (auto v : verdicts) {
    bool inside = false;
    for (const auto& e : events) inside |= covers(e, num(v["at"]));
    if (inside) continue;
    ++quiet;
    alarms += v["class"] != "none";
  }
  const auto report = read_report(*dir_);
  EXPECT_NEAR(num(report.at("false_negative_rate")), static_cast<double>(missed) / events.size(),
              1e-9);
  EXPECT_NEAR(num(report.at("false_positive_rate")), quiet ? static_cast<double>(alarms) / quiet : 0,
              1e-9);
  EXPECT_EQ(num(report.at("verdicts")), static_cast<double>(verdicts.size()));
}

TEST_F(DefaultRun, CountersMatchLedgers) {
  const auto report = read_report(*dir_);
  for (auto row : read_csv(*dir_ / "drops.csv")) {
    EXPECT_EQ(report.at("drops_" + row["cause"]), row["count"]);
  }
  const auto responses = read_csv(*dir_ / "responses.csv");
  int declared = 0;
  for (auto row : responses) declared += row["declared_by"] != "fallback";
  EXPECT_EQ(num(report.at("responses_declared")), declared);
  EXPECT_EQ(num(report.at("responses_fallback")), static_cast<double>(responses.size()) - declared);
  EXPECT_EQ(report.at("tx_violations"), "0");
  EXPECT_EQ(report.at("ttl_violations"), "0");
}

TEST_F(DefaultRun, InMemoryReportMatchesFile) {
  const auto report = read_report(*dir_);
  for (const auto& [k, v] : report_->metrics) {
    ASSERT_TRUE(report.count(k)) << k;
    EXPECT_NEAR(num(report.at(k)), v, 1e-9 * std::max(1.0, std::abs(v))) << k;
  }
}

TEST_F(DefaultRun, RepeatRunIsByteIdentical) {
  const auto again = scratch("again");
  run_scenario(ScenarioConfig{}, again);
  expect_same_tree(*dir_, again);
}

TEST(Report, UnknownMetricThrows) {
  RunReport r;
  EXPECT_THROW(r.metric("nope"), Error);
}

TEST(Report, UnwritableDirectoryIsIoError) {
  const auto dir = scratch("blocked");
  fs::create_directories(dir.parent_path());
  std::ofstream(dir) << "a file, not a directory";
  ScenarioConfig cfg;
  cfg.scenarios = {false, false, false, false, false};
  cfg.num_su = 0;
  try {
    run_scenario(cfg, dir / "sub");
    FAIL() << "expected IoError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

namespace {

ScenarioConfig detection_only() {
  ScenarioConfig cfg;
  cfg.scenarios.spectrum = false;
  cfg.scenarios.discovery = false;
  cfg.scenarios.response = false;
  cfg.scenarios.situation = false;
  return cfg;
}

}  // namespace

TEST(Sweep, RejectsBadSpecs) {
  const auto dir = scratch("bad");
  const auto code = [&](SweepSpec spec) -> std::optional<ErrorCode> {
    try {
      run_sweep(spec, dir);
    } catch (const Error& e) {
      return e.code();
    }
    return std::nullopt;
  };
  EXPECT_EQ(code({"detection.n_groups", {1}, 0, detection_only()}), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code({"detection.n_groups", {}, 1, detection_only()}), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code({"detection.nope", {1}, 1, detection_only()}), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code({"detection.n_groups", {0}, 1, detection_only()}), ErrorCode::ConfigInvalid);
}

TEST(Sweep, GroupCountSweepWritesRowsAndSummary) {
  const auto dir = scratch("groups");
  SweepSpec spec{"detection.n_groups", {1, 2, 3, 4, 5}, 3, detection_only()};
  const auto rows = run_sweep(spec, dir);
  ASSERT_EQ(rows.size(), 15u);
  const auto sweep = read_csv(dir / "sweep.csv");
  const auto summary = read_csv(dir / "sweep_summary.csv");
  ASSERT_EQ(sweep.size(), 15u);
  ASSERT_EQ(summary.size(), 5u);

  std::map<std::string, std::vector<double>> fnr;
  for (auto row : sweep) fnr[row["value"]].push_back(num(row["false_negative_rate"]));
  for (auto row : summary) {
    const auto& xs = fnr.at(row["value"]);
    ASSERT_EQ(xs.size(), 3u);
    EXPECT_EQ(row["runs"], "3");
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= 3;
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    EXPECT_NEAR(num(row["false_negative_rate_mean"]), mean, 1e-9);
    EXPECT_NEAR(num(row["false_negative_rate_stddev"]), std::sqrt(ss / 2), 1e-9);
  }
  EXPECT_LE(num(summary[4].at("false_negative_rate_mean")),
            num(summary[0].at("false_negative_rate_mean")));

  // Every row is the plain run of its own overridden config.
  const auto& probe = rows[7];  // value 3, repeat 1
  EXPECT_EQ(probe.value, 3);
  EXPECT_EQ(probe.repeat, 1);
  EXPECT_EQ(probe.seed, derive_seed(1, "repeat/1"));
  auto cfg = with_override(detection_only(), "detection.n_groups", 3);
  cfg.master_seed = probe.seed;
  const auto alone_dir = scratch("alone");
  const auto alone = run_scenario(cfg, alone_dir);
  EXPECT_EQ(alone.metrics, probe.report.metrics);
  EXPECT_EQ(slurp(dir / "runs" / "value-3" / "repeat-1" / "report.csv"),
            slurp(alone_dir / "report.csv"));
}

TEST(Sweep, OutputDoesNotDependOnJobCount) {
  ScenarioConfig base = detection_only();
  base.sim_duration_s = 200;
  base.detection.num_events = 3;
  SweepSpec spec{"detection.noise_sigma", {0.02, 0.1}, 2, base};
  const auto one = scratch("one");
  const auto two = scratch("two");
  run_sweep(spec, one, 1);
  run_sweep(spec, two, 3);
  expect_same_tree(one, two);
}

TEST(TrainDetector, HeldOutAccuracyAcrossSeeds) {
  const auto dir = scratch("models");
  fs::create_directories(dir);
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto model = dir / ("m" + std::to_string(seed) + ".json");
    const auto out = train_detector(DetectionParams{}, seed, model, dir / "curve.csv");
    good += out.heldout.accuracy >= 0.9;
    EXPECT_GT(out.heldout.samples, 0);
    EXPECT_TRUE(fs::exists(model));
  }
  EXPECT_GE(good, 9);
  const auto curve = read_csv(dir / "curve.csv");
  EXPECT_FALSE(curve.empty());
  EXPECT_EQ(curve.front().at("epoch"), "1");
}

TEST(TrainDetector, LooseTargetStopsAfterOneEpoch) {
  const auto dir = scratch("loose");
  fs::create_directories(dir);
  DetectionParams p;
  p.train.target_mse = 1.0;
  const auto out = train_detector(p, 1, dir / "m.json", dir / "c.csv");
  EXPECT_EQ(out.mse_history.size(), 1u);
  EXPECT_EQ(read_csv(dir / "c.csv").size(), 1u);
}

TEST(TrainDetector, BadModelPathIsIoError) {
  DetectionParams p;
  p.train.max_epochs = 5;
  try {
    train_detector(p, 1, "/nonexistent-dir/x/model.json", scratch("c") / "c.csv");
    FAIL() << "expected IoError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}
