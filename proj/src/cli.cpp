#include "sosekf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace sosekf {
namespace {

using nlohmann::json;

constexpr double kM1Floor = 1e-8;    // assumption1 passes iff m1_hat clears this
constexpr double kM2Ceiling = 1e15;  // assumption2 passes iff m2_hat stays below this
constexpr double kRateSlack = 0.03;  // binomial slack on the theorem3 violation rate
constexpr double kCurveFloor = 1e-9; // regret below this counts as zero in growth ratios

bool is_wellspecified_check(const std::string& check) {
  return check == "prop3" || check == "theorem3" || check == "theorem4" ||
         check == "assumptions" || check == "decay" || check == "expected_regret";
}

bool needs_sos(const std::string& check) {
  return check == "theorem1" || check == "prop2" || check == "lemma1";
}

bool needs_ekf(const std::string& check) {
  return check == "theorem3" || check == "theorem4" || check == "assumptions" ||
         check == "decay" || check == "expected_regret";
}

bool needs_two_replicates(const std::string& check) {
  return check == "theorem4" || check == "assumptions" || check == "decay";
}

int effective_jobs(int jobs) {
  if (jobs > 0) return jobs;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

bool has_kind(const std::vector<LearnerConfig>& learners, LearnerKind kind) {
  return std::any_of(learners.begin(), learners.end(),
                     [kind](const LearnerConfig& lc) { return lc.kind == kind; });
}

// ---------------------------------------------------------------------------
// JSON config parsing

[[noreturn]] void bad_config(const std::string& message) {
  throw ParseError("config: " + message);
}

void require_object(const json& value, const std::string& name) {
  if (!value.is_object()) bad_config(name + " must be an object");
}

void reject_unknown_keys(const json& obj, const std::string& name,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) bad_config(name + ": unknown field '" + item.key() + "'");
  }
}

double as_number(const json& value, const std::string& name) {
  if (!value.is_number()) bad_config(name + " must be a number");
  return value.get<double>();
}

int as_int(const json& value, const std::string& name) {
  if (!value.is_number_integer()) bad_config(name + " must be an integer");
  return value.get<int>();
}

std::string as_string(const json& value, const std::string& name) {
  if (!value.is_string()) bad_config(name + " must be a string");
  return value.get<std::string>();
}

Vector as_vector(const json& value, const std::string& name) {
  if (!value.is_array() || value.empty()) bad_config(name + " must be a non-empty array");
  Vector v(static_cast<int>(value.size()));
  for (int i = 0; i < v.size(); ++i) {
    v[i] = as_number(value[static_cast<std::size_t>(i)], name + "[" + std::to_string(i) + "]");
  }
  return v;
}

StreamSpec parse_stream(const json& node, std::optional<std::string>& csv_path) {
  require_object(node, "stream");
  reject_unknown_keys(node, "stream",
                      {"n", "d", "scheme", "theta_true", "feature_law", "radius", "path",
                       "fixed_list"});
  StreamSpec spec;
  if (node.contains("n")) spec.n = as_int(node["n"], "stream.n");
  if (node.contains("d")) spec.d = as_int(node["d"], "stream.d");
  if (node.contains("scheme")) {
    try {
      spec.scheme = scheme_from_string(as_string(node["scheme"], "stream.scheme"));
    } catch (const Error& e) {
      bad_config(e.what());
    }
  }
  if (node.contains("theta_true")) {
    spec.theta_true = as_vector(node["theta_true"], "stream.theta_true");
  }
  if (node.contains("feature_law")) {
    try {
      spec.feature_law =
          feature_law_from_string(as_string(node["feature_law"], "stream.feature_law"));
    } catch (const Error& e) {
      bad_config(e.what());
    }
  }
  if (node.contains("radius")) spec.radius = as_number(node["radius"], "stream.radius");
  if (node.contains("path")) csv_path = as_string(node["path"], "stream.path");
  if (node.contains("fixed_list")) {
    const json& rows = node["fixed_list"];
    if (!rows.is_array() || rows.empty()) bad_config("stream.fixed_list must be a non-empty array");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::string name = "stream.fixed_list[" + std::to_string(i) + "]";
      Vector row = as_vector(rows[i], name);
      if (row.size() < 2) bad_config(name + " must be [y, x1, ..., xd]");
      double y = row[0];
      if (y != 1.0 && y != -1.0) bad_config(name + ": label must be -1 or 1");
      spec.fixed_list.emplace_back(row.tail(row.size() - 1).eval(), static_cast<int>(y));
    }
  }
  return spec;
}

std::vector<LearnerConfig> parse_learners(const json& node) {
  if (!node.is_array() || node.empty()) bad_config("learners must be a non-empty array");
  std::vector<LearnerConfig> learners;
  for (std::size_t i = 0; i < node.size(); ++i) {
    std::string name = "learners[" + std::to_string(i) + "]";
    const json& entry = node[i];
    require_object(entry, name);
    reject_unknown_keys(entry, name, {"kind", "p1", "rate_c", "gamma", "diameter"});
    if (!entry.contains("kind")) bad_config(name + ".kind is required");
    LearnerConfig lc;
    try {
      lc.kind = learner_kind_from_string(as_string(entry["kind"], name + ".kind"));
    } catch (const Error& e) {
      bad_config(e.what());
    }
    if (entry.contains("p1")) lc.params.p1 = as_number(entry["p1"], name + ".p1");
    if (entry.contains("rate_c")) lc.params.ogd_rate_c = as_number(entry["rate_c"], name + ".rate_c");
    if (entry.contains("gamma")) lc.params.ons_gamma = as_number(entry["gamma"], name + ".gamma");
    if (entry.contains("diameter")) {
      lc.params.ons_diameter = as_number(entry["diameter"], name + ".diameter");
    }
    learners.push_back(std::move(lc));
  }
  return learners;
}

SweepGrid parse_sweep(const json& node) {
  require_object(node, "sweep");
  reject_unknown_keys(node, "sweep", {"n", "d", "p1", "seeds"});
  SweepGrid grid;
  auto ints = [](const json& value, const std::string& name) {
    if (!value.is_array()) bad_config(name + " must be an array");
    std::vector<int> out;
    for (std::size_t i = 0; i < value.size(); ++i) {
      out.push_back(as_int(value[i], name + "[" + std::to_string(i) + "]"));
    }
    return out;
  };
  if (node.contains("n")) grid.n = ints(node["n"], "sweep.n");
  if (node.contains("d")) grid.d = ints(node["d"], "sweep.d");
  if (node.contains("p1")) {
    if (!node["p1"].is_array()) bad_config("sweep.p1 must be an array");
    for (std::size_t i = 0; i < node["p1"].size(); ++i) {
      grid.p1.push_back(as_number(node["p1"][i], "sweep.p1[" + std::to_string(i) + "]"));
    }
  }
  if (node.contains("seeds")) {
    if (!node["seeds"].is_array()) bad_config("sweep.seeds must be an array");
    for (std::size_t i = 0; i < node["seeds"].size(); ++i) {
      const json& v = node["seeds"][i];
      if (!v.is_number_integer()) bad_config("sweep.seeds entries must be integers");
      grid.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Run orchestration

struct LearnerRun {
  LearnerConfig config;
  std::string label;
  std::vector<LearnerTrace> traces;
  EnvelopeStats envelope;  // componentwise max over replicates
};

std::string learner_label(const std::vector<LearnerConfig>& learners, std::size_t index) {
  int same_kind = 0;
  int ordinal = 0;
  for (std::size_t i = 0; i < learners.size(); ++i) {
    if (learners[i].kind == learners[index].kind) {
      ++same_kind;
      if (i < index) ++ordinal;
    }
  }
  std::string label = to_string(learners[index].kind);
  if (same_kind > 1) label += "_" + std::to_string(ordinal + 1);
  return label;
}

/// Replaces a csv-backed stream with an equivalent fixed replay so the
/// generic replicate machinery can regenerate it.
void resolve_csv_stream(ExperimentConfig& config) {
  if (config.stream.scheme != Scheme::kCsv) return;
  if (!config.csv_path || config.csv_path->empty()) {
    throw ConfigError("stream.path is required for the csv scheme");
  }
  Stream loaded = load_csv(*config.csv_path);
  config.stream.n = loaded.spec.n;
  config.stream.d = loaded.spec.d;
  config.stream.scheme = Scheme::kFixedReplay;
  config.stream.feature_law = FeatureLaw::kFixedList;
  config.stream.fixed_list = std::move(loaded.observations);
}

std::vector<LearnerRun> run_all(const ExperimentConfig& config, bool verify_mode) {
  StreamSpec spec = config.stream;
  spec.seed = config.base_seed;
  std::vector<LearnerRun> runs;
  for (std::size_t i = 0; i < config.learners.size(); ++i) {
    TraceOptions options;
    options.params = config.learners[i].params;
    options.verify = verify_mode;
    if (config.sabotage) {
      options.sabotage_step = std::max(1, 3 * spec.n / 4);
    }
    LearnerRun run;
    run.config = config.learners[i];
    run.label = learner_label(config.learners, i);
    run.traces = run_replicates(spec, config.learners[i].kind, options, config.replicates,
                                effective_jobs(config.jobs));
    for (const auto& trace : run.traces) {
      run.envelope.d_x = std::max(run.envelope.d_x, trace.envelope.d_x);
      run.envelope.d_theta = std::max(run.envelope.d_theta, trace.envelope.d_theta);
      run.envelope.d_margin = std::max(run.envelope.d_margin, trace.envelope.d_margin);
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

const LearnerRun* find_kind(const std::vector<LearnerRun>& runs, LearnerKind kind) {
  for (const auto& run : runs) {
    if (run.config.kind == kind) return &run;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Output writers

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_steps_csv(const std::filesystem::path& path, const std::vector<LearnerRun>& runs,
                     bool full_trace) {
  std::ofstream out = open_out(path);
  out << "schema_version,learner,replicate,t,loss,cum_loss,margin,weight,quad,grad_norm,"
         "theta_norm\n";
  for (const auto& run : runs) {
    for (std::size_t r = 0; r < run.traces.size(); ++r) {
      const LearnerTrace& trace = run.traces[r];
      std::vector<int> sampled = sample_steps(trace.n(), full_trace);
      std::size_t next = 0;
      double cum = 0.0;
      for (int t = 1; t <= trace.n() && next < sampled.size(); ++t) {
        const StepRecord& step = trace.steps[static_cast<std::size_t>(t - 1)];
        cum += step.loss;
        if (t != sampled[next]) continue;
        ++next;
        out << kSchemaVersion << ',' << run.label << ',' << r << ',' << t << ','
            << format_real(step.loss) << ',' << format_real(cum) << ','
            << format_real(step.margin) << ',' << format_real(step.weight) << ','
            << format_real(step.quad) << ',' << format_real(step.grad_norm) << ','
            << format_real(trace.thetas[static_cast<std::size_t>(t - 1)].norm()) << '\n';
      }
    }
  }
}

void write_reports_csv(const std::filesystem::path& path, const std::vector<BoundReport>& rows) {
  std::ofstream out = open_out(path);
  out << "name,lhs,rhs,slack,satisfied\n";
  for (const auto& row : rows) {
    out << row.name << ',' << format_real(row.lhs) << ',' << format_real(row.rhs) << ','
        << format_real(row.slack) << ',' << (row.satisfied ? "true" : "false") << '\n';
  }
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json config_echo(const ExperimentConfig& config) {
  json stream{{"n", config.stream.n},
              {"d", config.stream.d},
              {"scheme", to_string(config.stream.scheme)},
              {"feature_law", to_string(config.stream.feature_law)},
              {"radius", config.stream.radius}};
  if (config.stream.theta_true) stream["theta_true"] = vector_to_json(*config.stream.theta_true);
  if (config.csv_path) stream["path"] = *config.csv_path;
  if (!config.stream.fixed_list.empty()) {
    stream["fixed_list_size"] = config.stream.fixed_list.size();
  }

  json learners = json::array();
  for (const auto& lc : config.learners) {
    json entry{{"kind", to_string(lc.kind)}, {"p1", lc.params.p1}};
    if (lc.kind == LearnerKind::kOgd) entry["rate_c"] = lc.params.ogd_rate_c;
    if (lc.kind == LearnerKind::kOns) {
      entry["gamma"] = lc.params.ons_gamma;
      entry["diameter"] = lc.params.ons_diameter;
    }
    learners.push_back(entry);
  }

  return json{{"stream", stream},
              {"learners", learners},
              {"replicates", config.replicates},
              {"checks", config.checks},
              {"localization",
               {{"epsilon", config.localization.epsilon},
                {"alpha", config.localization.alpha},
                {"delta", config.localization.delta}}},
              {"output",
               {{"dir", config.output.dir},
                {"csv", config.output.csv},
                {"json", config.output.json}}},
              {"base_seed", config.base_seed},
              {"flags",
               {{"allow_slow", config.allow_slow},
                {"full_trace", config.full_trace},
                {"sabotage", config.sabotage}}}};
}

json base_manifest(const ExperimentConfig& config, const std::vector<LearnerRun>& runs) {
  json manifest;
  manifest["config"] = config_echo(config);
  manifest["version"] = json{{"artifact", kArtifactVersion}, {"schema", kSchemaVersion}};

  json envelopes;
  for (const auto& run : runs) {
    envelopes[run.label] = json{{"d_x", run.envelope.d_x},
                                {"d_theta", run.envelope.d_theta},
                                {"d_margin", run.envelope.d_margin}};
  }
  manifest["envelopes"] = envelopes;

  json results;
  json seeds = json::array();
  for (int r = 0; r < config.replicates; ++r) {
    seeds.push_back(config.base_seed ^ static_cast<std::uint64_t>(r));
  }
  results["seeds"] = seeds;
  for (const auto& run : runs) {
    json losses = json::array();
    json finals = json::array();
    for (const auto& trace : run.traces) {
      losses.push_back(trace.cumulative_loss());
      finals.push_back(vector_to_json(trace.thetas.back()));
    }
    results["cum_loss"][run.label] = losses;
    results["final_theta"][run.label] = finals;
  }
  if (config.stream.theta_true) {
    for (const auto& run : runs) {
      std::vector<int> sampled = sample_steps(config.stream.n, false);
      std::vector<double> mean(sampled.size(), 0.0);
      for (const auto& trace : run.traces) {
        std::vector<double> curve = cumulative_expected_regret_curve(trace,
                                                                     *config.stream.theta_true);
        for (std::size_t i = 0; i < sampled.size(); ++i) {
          mean[i] += curve[static_cast<std::size_t>(sampled[i] - 1)];
        }
      }
      for (double& v : mean) v /= static_cast<double>(run.traces.size());
      results["expected_regret_curve"][run.label] = json{{"t", sampled}, {"mean", mean}};
    }
  }
  manifest["results"] = results;
  return manifest;
}

void write_manifest(const std::filesystem::path& path, const json& manifest) {
  std::ofstream out = open_out(path);
  out << manifest.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Verify-mode checks

std::optional<double> analytic_lambda_min(const StreamSpec& spec) {
  if (spec.scheme != Scheme::kWellspecified) return std::nullopt;
  switch (spec.feature_law) {
    case FeatureLaw::kUniformSphere:
      return spec.radius * spec.radius / spec.d;  // E[XX^T] = (r^2/d) I on the sphere
    case FeatureLaw::kUniformCube:
      return spec.radius * spec.radius / 3.0;  // independent coordinates, E[x_i^2] = r^2/3
    case FeatureLaw::kFixedList:
      return std::nullopt;
  }
  return std::nullopt;
}

struct VerifyOutput {
  std::vector<BoundReport> rows;
  json extra = json::object();
  bool all_satisfied = true;
};

/// Per-replicate theorem3 rows carry their own verdicts but the check is
/// a high-probability statement: only the aggregate violation rate gates
/// the exit code.
bool row_gates_exit(const BoundReport& row) { return row.name != "theorem3"; }

void append_row(VerifyOutput& out, BoundReport row) {
  if (row_gates_exit(row) && !row.satisfied) out.all_satisfied = false;
  out.rows.push_back(std::move(row));
}

void check_theorem1(VerifyOutput& out, const LearnerRun& sos) {
  for (const auto& trace : sos.traces) {
    std::vector<Vector> comparators;
    comparators.push_back(Vector::Zero(trace.d()));
    comparators.push_back(
        ftl_fit(trace.stream.observations, trace.p1, Vector::Zero(trace.d())));
    if (trace.stream.spec.theta_true) comparators.push_back(*trace.stream.spec.theta_true);
    std::optional<BoundReport> worst;
    for (const auto& theta : comparators) {
      BoundReport report = theorem1_check(trace, theta);
      if (!worst || report.lhs - report.rhs > worst->lhs - worst->rhs) worst = report;
    }
    append_row(out, std::move(*worst));
  }
}

void check_theorem3(VerifyOutput& out, const LearnerRun& ekf, const Vector& theta_true,
                    const LocalizationParams& loc) {
  int violations = 0;
  for (const auto& trace : ekf.traces) {
    BoundReport report =
        theorem3_check(trace, theta_true, loc.epsilon, loc.alpha, loc.delta);
    if (!report.satisfied) ++violations;
    append_row(out, std::move(report));
  }
  double rate = static_cast<double>(violations) / static_cast<double>(ekf.traces.size());
  append_row(out, make_report("theorem3_rate", rate, loc.delta + kRateSlack));
}

void check_theorem4(VerifyOutput& out, const LearnerRun& ekf, const Vector& theta_true,
                    const LocalizationParams& loc, const StreamSpec& spec) {
  AssumptionEstimates est = assumption_estimates(ekf.traces, analytic_lambda_min(spec));
  double mean_outside = 0.0;
  for (const auto& trace : ekf.traces) {
    LocalizedSet set = localized_set(trace, theta_true, loc.epsilon);
    mean_outside += trace.n() - set.cardinality;
  }
  mean_outside /= static_cast<double>(ekf.traces.size());

  double exp_d = std::exp(ekf.envelope.d_margin);
  double a = std::exp(-ekf.envelope.d_margin) * est.m1_hat / (1.0 + exp_d);
  double d_theta = std::max(ekf.envelope.d_theta, theta_true.norm());
  std::optional<int> k = select_k(a);
  double rhs = std::numeric_limits<double>::infinity();
  if (k && ekf.envelope.d_x > 0.0) {
    double b_k = b_k_constant(*k, est.m2_hat, ekf.config.params.p1, ekf.envelope.d_x, d_theta);
    rhs = theorem4_bound(loc.epsilon, *k, a, b_k, ekf.envelope.d_x, spec.n);
    out.extra["theorem4"] = json{{"a", a}, {"k", *k}, {"b_k", b_k}};
  } else {
    std::cerr << "theorem4: no feasible k for a = " << a << "; bound is vacuous\n";
    out.extra["theorem4"] = json{{"a", a}, {"feasible", false}};
  }
  append_row(out, make_report("theorem4", mean_outside, rhs));
}

void check_assumptions(VerifyOutput& out, const LearnerRun& ekf, const StreamSpec& spec) {
  AssumptionEstimates est = assumption_estimates(ekf.traces, analytic_lambda_min(spec));
  append_row(out, make_report("assumption1", kM1Floor, est.m1_hat));
  append_row(out, make_report("assumption2", est.m2_hat, kM2Ceiling));

  std::vector<int> sampled = sample_steps(spec.n, false);
  json lam = json::array();
  json quad = json::array();
  for (int t : sampled) {
    lam.push_back(est.t_lambda_min[static_cast<std::size_t>(t - 1)]);
    quad.push_back(est.t2_mean_quad[static_cast<std::size_t>(t - 1)]);
  }
  json node{{"m1_hat", est.m1_hat},
            {"m2_hat", est.m2_hat},
            {"t", sampled},
            {"t_lambda_min", lam},
            {"t2_mean_quad", quad}};
  if (est.prop4_lower) node["analytic_lower"] = *est.prop4_lower;
  if (est.prop4_upper_scale) node["analytic_upper_scale"] = *est.prop4_upper_scale;
  out.extra["assumptions"] = node;
}

void check_expected_regret(VerifyOutput& out, const LearnerRun& ekf, const Vector& theta_true) {
  const int n = ekf.traces.front().n();
  std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
  for (const auto& trace : ekf.traces) {
    std::vector<double> curve = cumulative_expected_regret_curve(trace, theta_true);
    for (int t = 0; t < n; ++t) mean[static_cast<std::size_t>(t)] += curve[static_cast<std::size_t>(t)];
  }
  for (double& v : mean) v /= static_cast<double>(ekf.traces.size());

  // Growth test: regret at n vs at n/100 should stay within the log ratio
  // plus slack for the constant terms. The reference point is floored at
  // 100 because the log-growth regime only holds past the transient.
  int n_small = std::max(100, n / 100);
  double lhs;
  double rhs;
  if (n_small >= n) {
    lhs = 1.0;
    rhs = 1.5;
  } else {
    double r_small = mean[static_cast<std::size_t>(n_small - 1)];
    double r_full = mean[static_cast<std::size_t>(n - 1)];
    rhs = std::log(static_cast<double>(n)) / std::log(static_cast<double>(n_small)) + 0.5;
    if (r_small <= kCurveFloor) {
      lhs = r_full <= kCurveFloor ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      lhs = r_full / r_small;
    }
  }
  append_row(out, make_report("expected_regret", lhs, rhs));
}

VerifyOutput run_checks(const ExperimentConfig& config, const std::vector<LearnerRun>& runs) {
  std::vector<std::string> checks = config.checks;
  if (config.sabotage &&
      std::find(checks.begin(), checks.end(), "lemma1") == checks.end()) {
    checks.push_back("lemma1");  // the negative control most sensitive to a perturbed iterate
  }

  VerifyOutput out;
  std::set<std::string> seen;
  const LearnerRun* sos = find_kind(runs, LearnerKind::kSos);
  const LearnerRun* ekf = find_kind(runs, LearnerKind::kEkf);
  const Vector* theta_true =
      config.stream.theta_true ? &*config.stream.theta_true : nullptr;

  for (const auto& check : checks) {
    if (!seen.insert(check).second) continue;
    if (check == "theorem1") {
      check_theorem1(out, *sos);
    } else if (check == "prop2") {
      for (const auto& trace : sos->traces) append_row(out, prop2_check(trace));
    } else if (check == "lemma1") {
      int cap = config.allow_slow ? config.stream.n : kLemma1Cap;
      for (const auto& trace : sos->traces) append_row(out, lemma1_check(trace, cap));
    } else if (check == "prop3") {
      for (const auto& run : runs) {
        for (const auto& trace : run.traces) {
          append_row(out, prop3_check(trace, *theta_true));
          append_row(out, quadratic_variation_check(trace, *theta_true));
        }
      }
    } else if (check == "theorem3") {
      check_theorem3(out, *ekf, *theta_true, config.localization);
    } else if (check == "theorem4") {
      check_theorem4(out, *ekf, *theta_true, config.localization, config.stream);
    } else if (check == "assumptions") {
      check_assumptions(out, *ekf, config.stream);
    } else if (check == "decay") {
      append_row(out, error_decay_check(ekf->traces, *theta_true));
    } else if (check == "expected_regret") {
      check_expected_regret(out, *ekf, *theta_true);
    } else {
      throw ConfigError("unknown check '" + check + "'");
    }
  }
  return out;
}

std::filesystem::path ensure_out_dir(const ExperimentConfig& config) {
  std::filesystem::path dir(config.output.dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public surface

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> ids{"theorem1",   "prop2",   "lemma1",
                                            "prop3",      "theorem3", "theorem4",
                                            "assumptions", "decay",   "expected_regret"};
  return ids;
}

std::string format_real(double value) {
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

std::vector<int> sample_steps(int n, bool full) {
  std::vector<int> out;
  if (n < 1) return out;
  if (full) {
    out.resize(static_cast<std::size_t>(n));
    for (int t = 1; t <= n; ++t) out[static_cast<std::size_t>(t - 1)] = t;
    return out;
  }
  for (long long t = 1; t < n; t *= 2) out.push_back(static_cast<int>(t));
  out.push_back(n);
  return out;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  require_object(doc, "config");
  reject_unknown_keys(doc, "config",
                      {"stream", "learners", "replicates", "checks", "localization", "output",
                       "base_seed", "sweep"});

  ExperimentConfig config;
  if (!doc.contains("stream")) bad_config("stream is required");
  config.stream = parse_stream(doc["stream"], config.csv_path);
  if (!doc.contains("learners")) bad_config("learners is required");
  config.learners = parse_learners(doc["learners"]);
  if (doc.contains("replicates")) config.replicates = as_int(doc["replicates"], "replicates");
  if (doc.contains("checks")) {
    const json& node = doc["checks"];
    if (!node.is_array()) bad_config("checks must be an array");
    for (std::size_t i = 0; i < node.size(); ++i) {
      config.checks.push_back(as_string(node[i], "checks[" + std::to_string(i) + "]"));
    }
  }
  if (doc.contains("localization")) {
    const json& node = doc["localization"];
    require_object(node, "localization");
    reject_unknown_keys(node, "localization", {"epsilon", "alpha", "delta"});
    if (node.contains("epsilon")) {
      config.localization.epsilon = as_number(node["epsilon"], "localization.epsilon");
    }
    if (node.contains("alpha")) {
      config.localization.alpha = as_number(node["alpha"], "localization.alpha");
    }
    if (node.contains("delta")) {
      config.localization.delta = as_number(node["delta"], "localization.delta");
    }
  }
  if (doc.contains("output")) {
    const json& node = doc["output"];
    require_object(node, "output");
    reject_unknown_keys(node, "output", {"dir", "formats"});
    if (node.contains("dir")) config.output.dir = as_string(node["dir"], "output.dir");
    if (node.contains("formats")) {
      const json& formats = node["formats"];
      if (!formats.is_array() || formats.empty()) bad_config("output.formats must be a non-empty array");
      config.output.csv = false;
      config.output.json = false;
      for (std::size_t i = 0; i < formats.size(); ++i) {
        std::string f = as_string(formats[i], "output.formats[" + std::to_string(i) + "]");
        if (f == "csv") {
          config.output.csv = true;
        } else if (f == "json") {
          config.output.json = true;
        } else {
          bad_config("output.formats: unknown format '" + f + "'");
        }
      }
    }
  }
  if (doc.contains("base_seed")) {
    const json& node = doc["base_seed"];
    if (!node.is_number_integer()) bad_config("base_seed must be an integer");
    config.base_seed = node.get<std::uint64_t>();
  }
  if (doc.contains("sweep")) config.sweep = parse_sweep(doc["sweep"]);

  if (config.output.dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    config.output.dir = (env != nullptr && *env != '\0') ? env : "out";
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void ExperimentConfig::validate_for(const std::string& command) const {
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (jobs < 0) throw ConfigError("jobs must be >= 0");
  if (learners.empty()) throw ConfigError("at least one learner is required");
  for (const auto& lc : learners) {
    if (!(lc.params.p1 > 0.0)) throw ConfigError("learner p1 must be positive");
    if (lc.kind == LearnerKind::kOgd && !(lc.params.ogd_rate_c > 0.0)) {
      throw ConfigError("ogd rate_c must be positive");
    }
    if (lc.kind == LearnerKind::kOns &&
        (!(lc.params.ons_gamma > 0.0) || !(lc.params.ons_diameter > 0.0))) {
      throw ConfigError("ons gamma and diameter must be positive");
    }
  }
  if (!(localization.epsilon > 0.0) || !(localization.alpha > 0.0) ||
      !(localization.delta > 0.0) || !(localization.delta < 1.0)) {
    throw ConfigError("localization requires epsilon > 0, alpha > 0, 0 < delta < 1");
  }
  for (const auto& check : checks) {
    if (std::find(known_checks().begin(), known_checks().end(), check) ==
        known_checks().end()) {
      throw ConfigError("unknown check '" + check + "'");
    }
  }
  if (stream.scheme == Scheme::kCsv) {
    if (!csv_path || csv_path->empty()) {
      throw ConfigError("stream.path is required for the csv scheme");
    }
  } else {
    stream.validate();
  }

  int max_n = stream.n;
  if (command == "sweep") {
    if (sweep.empty()) throw ConfigError("sweep requires a parameter grid (n, d, p1, or seeds)");
    for (int v : sweep.n) {
      if (v < 1) throw ConfigError("sweep.n values must be >= 1");
      max_n = std::max(max_n, v);
    }
    for (int v : sweep.d) {
      if (v < 1) throw ConfigError("sweep.d values must be >= 1");
    }
    for (double v : sweep.p1) {
      if (!(v > 0.0)) throw ConfigError("sweep.p1 values must be positive");
    }
  }
  bool has_slow = std::any_of(learners.begin(), learners.end(), [](const LearnerConfig& lc) {
    return lc.kind == LearnerKind::kSos || lc.kind == LearnerKind::kFtl;
  });
  if (has_slow && max_n > kSlowStepCap && !allow_slow) {
    throw ConfigError("sos/ftl are quadratic in n and capped at n <= " +
                      std::to_string(kSlowStepCap) + "; pass --allow-slow to override");
  }

  if (command == "verify") {
    bool has_sos = has_kind(learners, LearnerKind::kSos);
    bool has_ekf = has_kind(learners, LearnerKind::kEkf);
    for (const auto& check : checks) {
      if (is_wellspecified_check(check) && stream.scheme != Scheme::kWellspecified) {
        throw ConfigError("check " + check +
                          " requires a well-specified stream with theta_true");
      }
      if (needs_sos(check) && !has_sos) {
        throw ConfigError("check " + check + " requires an sos learner");
      }
      if (needs_ekf(check) && !has_ekf) {
        throw ConfigError("check " + check + " requires an ekf learner");
      }
      if (needs_two_replicates(check) && replicates < 2) {
        throw ConfigError("check " + check + " requires at least 2 replicates");
      }
    }
    if ((std::find(checks.begin(), checks.end(), "lemma1") != checks.end() || sabotage) &&
        max_n > kLemma1Cap && !allow_slow) {
      throw ConfigError("lemma1 is quadratic in n and capped at n <= " +
                        std::to_string(kLemma1Cap) + "; pass --allow-slow to override");
    }
    if (sabotage && !has_sos) {
      throw ConfigError("--sabotage requires an sos learner (the negative control is lemma1)");
    }
  }
}

int cmd_run(const ExperimentConfig& config) {
  config.validate_for("run");
  std::vector<LearnerRun> runs = run_all(config, false);
  std::filesystem::path dir = ensure_out_dir(config);
  if (config.output.csv) write_steps_csv(dir / "steps.csv", runs, config.full_trace);
  if (config.output.json) write_manifest(dir / "manifest.json", base_manifest(config, runs));
  return 0;
}

int cmd_verify(const ExperimentConfig& config) {
  config.validate_for("verify");
  std::vector<LearnerRun> runs = run_all(config, true);
  VerifyOutput checks = run_checks(config, runs);

  std::filesystem::path dir = ensure_out_dir(config);
  if (config.output.csv) {
    write_steps_csv(dir / "steps.csv", runs, config.full_trace);
    write_reports_csv(dir / "reports.csv", checks.rows);
  }
  if (config.output.json) {
    json manifest = base_manifest(config, runs);
    json rows = json::array();
    for (const auto& row : checks.rows) {
      rows.push_back(json{{"name", row.name},
                          {"lhs", row.lhs},
                          {"rhs", row.rhs},
                          {"slack", row.slack},
                          {"satisfied", row.satisfied}});
    }
    manifest["results"]["checks"] = rows;
    manifest["results"]["all_satisfied"] = checks.all_satisfied;
    for (const auto& item : checks.extra.items()) {
      manifest["results"][item.key()] = item.value();
    }
    write_manifest(dir / "manifest.json", manifest);
  }

  for (const auto& row : checks.rows) {
    std::cout << row.name << ": " << (row.satisfied ? "satisfied" : "VIOLATED")
              << " (lhs " << format_real(row.lhs) << ", rhs " << format_real(row.rhs) << ")\n";
  }
  return checks.all_satisfied ? 0 : 1;
}

int cmd_sweep(const ExperimentConfig& config) {
  config.validate_for("sweep");

  std::vector<int> ns = config.sweep.n.empty() ? std::vector<int>{config.stream.n} : config.sweep.n;
  std::vector<int> ds = config.sweep.d.empty() ? std::vector<int>{config.stream.d} : config.sweep.d;
  std::vector<double> p1s =
      config.sweep.p1.empty() ? std::vector<double>{} : config.sweep.p1;
  std::vector<std::uint64_t> seeds = config.sweep.seeds.empty()
                                         ? std::vector<std::uint64_t>{config.base_seed}
                                         : config.sweep.seeds;

  json sweep_rows = json::array();
  std::ostringstream csv;
  csv << "schema_version,learner,n,d,p1,seed,replicates,mean_cum_loss,mean_expected_regret,"
         "regret_per_log_n\n";

  for (int n : ns) {
    for (int d : ds) {
      std::vector<double> p1_axis = p1s.empty() ? std::vector<double>{-1.0} : p1s;
      for (double p1 : p1_axis) {
        for (std::uint64_t seed : seeds) {
          ExperimentConfig point = config;
          point.stream.n = n;
          point.stream.d = d;
          point.base_seed = seed;
          if (d != config.stream.d && config.stream.theta_true) {
            // Dimension changed: keep the comparator's norm, spread evenly.
            double norm = config.stream.theta_true->norm();
            point.stream.theta_true =
                Vector::Constant(d, norm / std::sqrt(static_cast<double>(d)));
          }
          if (p1 > 0.0) {
            for (auto& lc : point.learners) lc.params.p1 = p1;
          }
          std::vector<LearnerRun> runs = run_all(point, false);
          for (const auto& run : runs) {
            double mean_loss = 0.0;
            double mean_regret = std::numeric_limits<double>::quiet_NaN();
            for (const auto& trace : run.traces) mean_loss += trace.cumulative_loss();
            mean_loss /= static_cast<double>(run.traces.size());
            if (point.stream.theta_true) {
              mean_regret = 0.0;
              for (const auto& trace : run.traces) {
                mean_regret += cumulative_expected_regret(trace, *point.stream.theta_true);
              }
              mean_regret /= static_cast<double>(run.traces.size());
            }
            double per_log = n >= 2 ? mean_regret / std::log(static_cast<double>(n))
                                    : std::numeric_limits<double>::quiet_NaN();
            double p1_used = run.config.params.p1;
            csv << kSchemaVersion << ',' << run.label << ',' << n << ',' << d << ','
                << format_real(p1_used) << ',' << seed << ',' << point.replicates << ','
                << format_real(mean_loss) << ',' << format_real(mean_regret) << ','
                << format_real(per_log) << '\n';
            sweep_rows.push_back(json{{"learner", run.label},
                                      {"n", n},
                                      {"d", d},
                                      {"p1", p1_used},
                                      {"seed", seed},
                                      {"replicates", point.replicates},
                                      {"mean_cum_loss", mean_loss},
                                      {"mean_expected_regret", mean_regret},
                                      {"regret_per_log_n", per_log}});
          }
        }
      }
    }
  }

  std::filesystem::path dir = ensure_out_dir(config);
  if (config.output.csv) {
    std::ofstream out = open_out(dir / "sweep.csv");
    out << csv.str();
  }
  if (config.output.json) {
    json manifest;
    manifest["config"] = config_echo(config);
    manifest["version"] = json{{"artifact", kArtifactVersion}, {"schema", kSchemaVersion}};
    manifest["envelopes"] = json::object();
    manifest["results"] = json{{"sweep", sweep_rows}};
    write_manifest(dir / "manifest.json", manifest);
  }
  return 0;
}

int cmd_report(const std::string& dir) {
  std::filesystem::path path = std::filesystem::path(dir) / "manifest.json";
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }

  std::cout << "artifact " << manifest.value("version", json::object()).value("artifact", "?")
            << "\n";
  if (manifest.contains("config")) {
    const json& cfg = manifest["config"];
    if (cfg.contains("stream")) {
      const json& s = cfg["stream"];
      std::cout << "stream: scheme=" << s.value("scheme", "?") << " n=" << s.value("n", 0)
                << " d=" << s.value("d", 0) << "\n";
    }
    std::cout << "replicates: " << cfg.value("replicates", 0)
              << "  base_seed: " << cfg.value("base_seed", 0) << "\n";
  }
  if (manifest.contains("envelopes")) {
    for (const auto& item : manifest["envelopes"].items()) {
      const json& e = item.value();
      std::cout << "envelope " << item.key() << ": d_x=" << e.value("d_x", 0.0)
                << " d_theta=" << e.value("d_theta", 0.0)
                << " d_margin=" << e.value("d_margin", 0.0) << "\n";
    }
  }
  if (manifest.contains("results")) {
    const json& results = manifest["results"];
    if (results.contains("cum_loss")) {
      for (const auto& item : results["cum_loss"].items()) {
        double total = 0.0;
        for (const auto& v : item.value()) total += v.get<double>();
        std::cout << "mean cumulative loss " << item.key() << ": "
                  << total / std::max<std::size_t>(1, item.value().size()) << "\n";
      }
    }
    if (results.contains("checks")) {
      std::cout << "checks:\n";
      for (const auto& row : results["checks"]) {
        std::cout << "  " << row.value("name", "?") << ": "
                  << (row.value("satisfied", false) ? "satisfied" : "VIOLATED")
                  << " (lhs " << row.value("lhs", 0.0) << ", rhs " << row.value("rhs", 0.0)
                  << ")\n";
      }
      std::cout << "verdict: "
                << (results.value("all_satisfied", false) ? "all satisfied" : "violations found")
                << "\n";
    }
    if (results.contains("sweep")) {
      std::cout << "sweep rows: " << results["sweep"].size() << "\n";
    }
  }
  return 0;
}

int run_command(const std::string& command, const ExperimentConfig& config) {
  try {
    if (command == "report") return cmd_report(config.output.dir);
    ExperimentConfig resolved = config;
    resolve_csv_stream(resolved);
    if (command == "run") return cmd_run(resolved);
    if (command == "verify") return cmd_verify(resolved);
    if (command == "sweep") return cmd_sweep(resolved);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const InsufficientDataError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace sosekf
