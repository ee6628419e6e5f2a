// proxbound: run a configured experiment and report its verification checks.
//
//   proxbound run <config> [--out DIR] [--quiet]
//   proxbound check <config>
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error,
// 3 runtime error.

#include "proxbound/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximal method experiments with convergence-theory checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "proxbound_out";
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run an experiment and write trace.csv and report.txt");
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_flag("--quiet", quiet, "Print nothing on success");

  auto* check = app.add_subcommand("check", "Validate a config without running it");
  check->add_option("config", config_path, "Experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  proxbound::ExperimentConfig cfg;
  try {
    cfg = proxbound::parse_config(config_path);
  } catch (const proxbound::ConfigError& e) {
    std::cerr << "proxbound: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "proxbound: " << e.what() << '\n';
    return kExitUsage;
  }

  if (check->parsed()) {
    std::cout << cfg.echo();
    return kExitPass;
  }

  try {
    const auto report = proxbound::run_experiment(cfg);
    proxbound::emit_report(report, out_dir);
    const bool pass = report.all_pass();
    if (!quiet || !pass) std::cout << report.summary();
    return pass ? kExitPass : kExitCheckFailed;
  } catch (const proxbound::ConfigError& e) {
    std::cerr << "proxbound: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "proxbound: " << e.what() << '\n';
    return kExitRuntime;
  }
}
