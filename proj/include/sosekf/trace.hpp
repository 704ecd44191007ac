#ifndef SOSEKF_TRACE_HPP
#define SOSEKF_TRACE_HPP

#include <optional>
#include <vector>

#include "sosekf/learners.hpp"

namespace sosekf {

/// Realized envelope constants of a run: d_x = max_t ||X_t||,
/// d_theta = max_t ||theta_t||, d_margin = max_t |theta_t^T X_t|,
/// all over the iterates t = 1..n actually charged a loss. Diagnostics
/// only; no learner reads them.
struct EnvelopeStats {
  double d_x = 0.0;
  double d_theta = 0.0;
  double d_margin = 0.0;
};

struct TraceOptions {
  LearnerParams params;
  bool verify = false;          // per-step SPD check of the state matrix (O(d^3)/step)
  bool store_p_history = false; // keep P_{t+1} for every step (O(n d^2) memory)
  std::optional<int> sabotage_step;  // test hook: corrupt theta after this step
};

/// Per-step diagnostics, everything the bound evaluators consume.
struct StepRecord {
  double loss;       // loss_t(y_t, theta_t)
  double margin;     // theta_t^T X_t
  double weight;     // hessian_weight(X_t, theta_t)
  double quad;       // X_t^T P_{t+1} X_t (0 for learners without a matrix)
  double grad_norm;  // ||gradient of loss_t at theta_t||
  Vector p_x;        // P_{t+1} X_t (zero vector for matrix-free learners)
};

struct LearnerTrace {
  LearnerKind kind;
  Stream stream;
  double p1;
  std::vector<Vector> thetas;        // theta_1 .. theta_{n+1}
  std::vector<StepRecord> steps;     // n records
  std::vector<SpdMatrix> p_history;  // P_2 .. P_{n+1} when requested
  EnvelopeStats envelope;

  int n() const { return static_cast<int>(steps.size()); }
  int d() const { return stream.spec.d; }
  double cumulative_loss() const;
};

/// Drives one learner over one stream, recording every step.
/// A non-finite update aborts with NumericError naming the step.
LearnerTrace run_trace(const Stream& stream, LearnerKind kind, const TraceOptions& options);

/// Independent replicates: replicate r regenerates the stream with
/// seed = spec.seed ^ r and runs run_trace. Work is spread over at most
/// `jobs` threads; results are indexed by replicate, so the output is
/// identical regardless of scheduling.
std::vector<LearnerTrace> run_replicates(const StreamSpec& spec, LearnerKind kind,
                                         const TraceOptions& options, int replicates, int jobs);

}  // namespace sosekf

#endif  // SOSEKF_TRACE_HPP
