#include "sosekf/trace.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>
#include <utility>

namespace sosekf {
namespace {

bool carries_matrix(LearnerKind kind) {
  return kind == LearnerKind::kEkf || kind == LearnerKind::kSos || kind == LearnerKind::kOns;
}

void verify_state(const LearnerState& state, LearnerKind kind, int t) {
  if (carries_matrix(kind) && !is_spd(state.p)) {
    throw NotSpdError("state matrix lost definiteness at step " + std::to_string(t));
  }
  if (kind == LearnerKind::kEkf) {
    // The Kalman matrix only shrinks from P_1 = p1 I in the Loewner order.
    double excess = max_eigenvalue_sym(
        state.p.mat() - state.p1 * Matrix::Identity(state.p.dim(), state.p.dim()));
    if (excess > tol::kLoewnerSlack) {
      throw Error("EKF matrix exceeded p1 I at step " + std::to_string(t) +
                  " by " + std::to_string(excess));
    }
  }
}

}  // namespace

double LearnerTrace::cumulative_loss() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.loss;
  return total;
}

LearnerTrace run_trace(const Stream& stream, LearnerKind kind, const TraceOptions& options) {
  const int n = static_cast<int>(stream.observations.size());
  const int d = stream.spec.d;

  LearnerState state = make_initial_state(d, options.params.p1);
  History history;
  if (kind == LearnerKind::kSos || kind == LearnerKind::kFtl) {
    history.reserve(static_cast<std::size_t>(n));
  }
  RateSchedule ogd_rate = [c = options.params.ogd_rate_c](int t) {
    return c / std::sqrt(static_cast<double>(t));
  };

  LearnerTrace trace;
  trace.kind = kind;
  trace.stream = stream;
  trace.p1 = options.params.p1;
  trace.thetas.reserve(static_cast<std::size_t>(n) + 1);
  trace.steps.reserve(static_cast<std::size_t>(n));
  if (options.store_p_history) trace.p_history.reserve(static_cast<std::size_t>(n));

  for (int t = 1; t <= n; ++t) {
    const Observation& obs = stream.observations[static_cast<std::size_t>(t - 1)];
    const Vector theta_t = state.theta;
    double margin = theta_t.dot(obs.x);

    try {
      switch (kind) {
        case LearnerKind::kEkf:
          state = ekf_step(state, obs);
          break;
        case LearnerKind::kSos:
          history.push_back(obs);
          state = sos_step(state, history, obs);
          break;
        case LearnerKind::kFtl:
          history.push_back(obs);
          state.theta = ftl_fit(history, state.p1, state.theta);
          state.step += 1;
          break;
        case LearnerKind::kOgd:
          state = ogd_step(state, obs, ogd_rate);
          break;
        case LearnerKind::kOns:
          state = ons_step(state, obs, options.params.ons_gamma, options.params.ons_diameter);
          break;
      }
    } catch (const NumericError& e) {
      throw NumericError("run aborted at step " + std::to_string(t) + ": " + e.what());
    }

    if (options.sabotage_step && *options.sabotage_step == t) {
      state.theta[0] += 0.1;
    }
    if (options.verify) {
      verify_state(state, kind, t);
    }

    StepRecord record;
    record.loss = logistic_loss_margin(obs.y, margin);
    record.margin = margin;
    record.weight = hessian_weight_margin(margin);
    record.grad_norm = loss_gradient(obs, theta_t).norm();
    if (carries_matrix(kind)) {
      record.quad = quadratic_form(state.p, obs.x);
      record.p_x = state.p.mat() * obs.x;
    } else {
      record.quad = 0.0;
      record.p_x = Vector::Zero(d);
    }

    trace.envelope.d_x = std::max(trace.envelope.d_x, obs.x.norm());
    trace.envelope.d_theta = std::max(trace.envelope.d_theta, theta_t.norm());
    trace.envelope.d_margin = std::max(trace.envelope.d_margin, std::abs(margin));

    trace.thetas.push_back(theta_t);
    trace.steps.push_back(std::move(record));
    if (options.store_p_history) trace.p_history.push_back(state.p);
  }
  trace.thetas.push_back(state.theta);  // theta_{n+1}
  return trace;
}

std::vector<LearnerTrace> run_replicates(const StreamSpec& spec, LearnerKind kind,
                                         const TraceOptions& options, int replicates, int jobs) {
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  spec.validate();

  std::vector<std::optional<LearnerTrace>> slots(static_cast<std::size_t>(replicates));
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (true) {
      int r = next.fetch_add(1);
      if (r >= replicates) return;
      try {
        StreamSpec replicate_spec = spec;
        replicate_spec.seed = spec.seed ^ static_cast<std::uint64_t>(r);
        slots[static_cast<std::size_t>(r)] = run_trace(generate(replicate_spec), kind, options);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int thread_count = std::clamp(jobs, 1, replicates);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(thread_count));
  for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  if (first_error) std::rethrow_exception(first_error);

  std::vector<LearnerTrace> traces;
  traces.reserve(static_cast<std::size_t>(replicates));
  for (auto& slot : slots) traces.push_back(std::move(*slot));
  return traces;
}

}  // namespace sosekf
