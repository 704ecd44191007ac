#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sosekf/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Second-order online logistic regression laboratory: runs EKF/SOS-style "
               "learners over generated or replayed streams, verifies regret and "
               "localization bounds, and sweeps parameter grids."};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 0;
  bool allow_slow = false;
  bool full_trace = false;
  bool sabotage = false;
  std::string report_dir;

  CLI::App* run = app.add_subcommand("run", "run learners over a stream and write traces");
  CLI::App* verify = app.add_subcommand("verify", "run learners and check the configured bounds");
  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter grid, long-format CSV output");
  CLI::App* report = app.add_subcommand("report", "summarize a previous run's manifest");

  for (CLI::App* cmd : {run, verify, sweep}) {
    cmd->add_option("--config", config_path, "JSON experiment config file")->required();
    cmd->add_option("--seed", seed, "override the config's base_seed");
    cmd->add_option("--jobs", jobs, "max worker threads (default: hardware concurrency)");
    cmd->add_flag("--allow-slow", allow_slow, "lift the O(n^2) step caps (sos, ftl, lemma1)");
    cmd->add_flag("--full-trace", full_trace, "write every step to steps.csv, not a sample");
    cmd->add_flag("--sabotage", sabotage, "test hook: perturb one update (negative control)");
  }
  report->add_option("--dir", report_dir, "output directory containing manifest.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is a configuration error
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub == report) {
    sosekf::ExperimentConfig config;
    if (!report_dir.empty()) {
      config.output.dir = report_dir;
    } else {
      const char* env = std::getenv(sosekf::kOutDirEnv);
      config.output.dir = (env != nullptr && *env != '\0') ? env : "out";
    }
    return sosekf::run_command("report", config);
  }

  try {
    sosekf::ExperimentConfig config = sosekf::load_config(config_path);
    if (sub->count("--seed") > 0) config.base_seed = seed;
    if (sub->count("--jobs") > 0) config.jobs = jobs;
    config.allow_slow = allow_slow;
    config.full_trace = full_trace;
    config.sabotage = sabotage;
    return sosekf::run_command(sub->get_name(), config);
  } catch (const sosekf::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const sosekf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
}
