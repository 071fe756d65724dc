#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crahn/config.hpp"
#include "crahn/error.hpp"
#include "crahn/report.hpp"

namespace {

constexpr int kUsageError = 2;

crahn::ScenarioConfig load(const std::string& path, const std::optional<std::uint64_t>& seed) {
  crahn::ScenarioConfig cfg = path.empty() ? crahn::ScenarioConfig{} : crahn::load_config_file(path);
  if (seed) cfg.master_seed = *seed;
  crahn::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disaster-response CRAHN simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Scenario JSON; defaults apply when omitted");
    sub->add_option("--seed", seed, "Override master_seed");
    sub->add_option("--out-dir", out_dir, "Output directory")->required();
  };

  auto* run = app.add_subcommand("run", "Simulate one scenario and write its ledgers");
  common(run);

  std::string parameter = "detection.n_groups";
  std::vector<double> values;
  int repeats = 1;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Repeat runs over values of one config field");
  common(sweep);
  sweep->add_option("--param", parameter, "Dotted config path")->capture_default_str();
  sweep->add_option("--values", values, "Values to sweep")->required()->delimiter(',');
  sweep->add_option("--repeats", repeats, "Runs per value")->capture_default_str();
  sweep->add_option("--jobs", jobs, "Parallel runs")->capture_default_str()->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train-detector", "Train and save a disaster detector");
  common(train);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*run) {
      const auto cfg = load(config_path, seed);
      const auto report = crahn::run_scenario(cfg, out_dir);
      std::printf("config_digest %s\n", report.config_digest.c_str());
      std::printf("false_negative_rate %s\n", crahn::format_number(report.false_negative_rate).c_str());
      std::printf("mean_switch_time_s %s\n", crahn::format_number(report.mean_switch_time_s).c_str());
      std::printf("mean_discovery_latency_s %s\n",
                  crahn::format_number(report.mean_discovery_latency_s).c_str());
      std::printf("discovery_success_rate %s\n",
                  crahn::format_number(report.discovery_success_rate).c_str());
    } else if (*sweep) {
      crahn::SweepSpec spec{parameter, values, repeats, load(config_path, seed)};
      const auto rows = crahn::run_sweep(spec, out_dir, jobs);
      std::printf("%zu runs written to %s\n", rows.size(), out_dir.c_str());
    } else if (*train) {
      const auto cfg = load(config_path, seed);
      const std::filesystem::path dir(out_dir);
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      const auto result = crahn::train_detector(cfg.detection, cfg.master_seed, dir / "detector.json",
                                                dir / "detector_training.csv");
      std::printf("epochs %zu\n", result.mse_history.size());
      std::printf("final_mse %s\n", crahn::format_number(result.mse_history.back()).c_str());
      std::printf("heldout_accuracy %s\n", crahn::format_number(result.heldout.accuracy).c_str());
      std::printf("heldout_false_negative_rate %s\n",
                  crahn::format_number(result.heldout.false_negative_rate).c_str());
    }
  } catch (const crahn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return crahn::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
