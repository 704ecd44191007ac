#ifndef SOSEKF_CLI_HPP
#define SOSEKF_CLI_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sosekf/bounds.hpp"
#include "sosekf/data.hpp"
#include "sosekf/learners.hpp"
#include "sosekf/trace.hpp"

namespace sosekf {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// Environment variable consulted for the default output directory.
inline constexpr const char* kOutDirEnv = "SOSEKF_OUT_DIR";

// n beyond which the O(n^2) learners (sos, ftl) refuse to run without
// --allow-slow, and the default cap for the O(n^2) lemma1 evaluation.
inline constexpr int kSlowStepCap = 5000;
inline constexpr int kLemma1Cap = 2000;

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kEkf;
  LearnerParams params;
};

struct LocalizationParams {
  double epsilon = 0.5;
  double alpha = 0.05;
  double delta = 0.05;
};

struct OutputConfig {
  std::string dir;  // resolved in parse: config value, else $SOSEKF_OUT_DIR, else "out"
  bool csv = true;
  bool json = true;
};

/// Parameter grid for the sweep command. Axes left empty inherit the
/// base config's single value; non-empty axes multiply out.
struct SweepGrid {
  std::vector<int> n;
  std::vector<int> d;
  std::vector<double> p1;
  std::vector<std::uint64_t> seeds;

  bool empty() const { return n.empty() && d.empty() && p1.empty() && seeds.empty(); }
};

struct ExperimentConfig {
  StreamSpec stream;
  std::optional<std::string> csv_path;  // source file when stream.scheme == csv
  std::vector<LearnerConfig> learners;
  int replicates = 1;
  std::vector<std::string> checks;
  LocalizationParams localization;
  OutputConfig output;
  std::uint64_t base_seed = 0;
  SweepGrid sweep;

  // Runtime flags (CLI-only, never from the config file).
  int jobs = 0;  // 0 = hardware concurrency
  bool allow_slow = false;
  bool full_trace = false;
  bool sabotage = false;

  /// Cross-field validation for one of "run", "verify", "sweep".
  /// Throws ConfigError on any violation (unknown check id, check vs
  /// stream/learner mismatches, O(n^2) learners beyond the step cap).
  void validate_for(const std::string& command) const;
};

/// The check identifiers accepted in ExperimentConfig::checks.
const std::vector<std::string>& known_checks();

/// Parse a JSON config document (text form). Field names mirror
/// ExperimentConfig. Throws ParseError / ConfigError.
ExperimentConfig parse_config(const std::string& json_text);

/// Read and parse a config file.
ExperimentConfig load_config(const std::string& path);

/// Step indices reported in steps.csv: 1..n when full, otherwise
/// powers of 2 up to n plus n itself.
std::vector<int> sample_steps(int n, bool full);

/// Shortest-round-trip decimal form used in all CSV output.
std::string format_real(double value);

// Subcommand drivers. They return the final process exit code for
// outcomes that are part of the contract (0 all-pass, 1 check failure)
// and throw for config (-> 2) and numeric (-> 3) failures, which
// run_command translates.
int cmd_run(const ExperimentConfig& config);
int cmd_verify(const ExperimentConfig& config);
int cmd_sweep(const ExperimentConfig& config);
int cmd_report(const std::string& dir);

/// Exception-to-exit-code boundary shared by main() and tests.
int run_command(const std::string& command, const ExperimentConfig& config);

}  // namespace sosekf

#endif  // SOSEKF_CLI_HPP
