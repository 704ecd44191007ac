#include "sosekf/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace sosekf {
namespace {

void require_kind(const LearnerTrace& trace, LearnerKind kind, const char* check) {
  if (trace.kind != kind) {
    throw Error(std::string(check) + " applies to " + to_string(kind) + " traces, got " +
                to_string(trace.kind));
  }
}

void require_dim(const LearnerTrace& trace, const Vector& v, const char* check) {
  if (v.size() != trace.d()) {
    throw DimensionError(std::string(check) + ": vector dimension " + std::to_string(v.size()) +
                         " vs trace dimension " + std::to_string(trace.d()));
  }
}

/// Collapses per-step inequalities into one report anchored at the step
/// with the worst lhs - rhs.
BoundReport worst_step_report(std::string name, std::vector<StepDetail> details) {
  double worst = -std::numeric_limits<double>::infinity();
  double lhs = 0.0;
  double rhs = 0.0;
  for (const auto& detail : details) {
    double gap = detail.lhs - detail.rhs;
    if (gap > worst || !std::isfinite(worst)) {
      worst = gap;
      lhs = detail.lhs;
      rhs = detail.rhs;
    }
  }
  BoundReport report = make_report(std::move(name), lhs, rhs);
  report.step_details = std::move(details);
  return report;
}

}  // namespace

BoundReport make_report(std::string name, double lhs, double rhs) {
  BoundReport report;
  report.name = std::move(name);
  report.lhs = lhs;
  report.rhs = rhs;
  report.satisfied = lhs <= rhs + tol::kBoundRel * (1.0 + std::abs(rhs));
  report.slack = rhs - lhs;
  return report;
}

double regret_vs_comparator(const LearnerTrace& trace, const Vector& theta) {
  require_dim(trace, theta, "regret_vs_comparator");
  double regret = 0.0;
  for (int t = 0; t < trace.n(); ++t) {
    const Observation& obs = trace.stream.observations[static_cast<std::size_t>(t)];
    regret += trace.steps[static_cast<std::size_t>(t)].loss - logistic_loss(obs, theta);
  }
  return regret;
}

double theorem1_rhs(int n, int d, double p1, const EnvelopeStats& envelope,
                    const Vector& theta, const Vector& theta1) {
  double exp_d = std::exp(envelope.d_margin);
  double reach = envelope.d_theta + theta.norm();
  double log_term =
      d * std::log1p(static_cast<double>(n - 1) * p1 * envelope.d_x * envelope.d_x);
  return (std::sqrt(static_cast<double>(d)) * envelope.d_x * reach * (1.0 + exp_d) / 4.0 + 1.0) *
             ((1.0 + exp_d) / 2.0) * log_term +
         (theta1.squaredNorm() + theta.squaredNorm()) / (2.0 * p1) + envelope.d_x * reach;
}

BoundReport theorem1_check(const LearnerTrace& trace, const Vector& theta) {
  require_kind(trace, LearnerKind::kSos, "theorem1_check");
  require_dim(trace, theta, "theorem1_check");
  double lhs = regret_vs_comparator(trace, theta);
  double rhs =
      theorem1_rhs(trace.n(), trace.d(), trace.p1, trace.envelope, theta, trace.thetas.front());
  return make_report("theorem1", lhs, rhs);
}

BoundReport prop2_check(const LearnerTrace& trace) {
  require_kind(trace, LearnerKind::kSos, "prop2_check");
  const int n = trace.n();
  double lhs = 0.0;
  for (int t = 0; t + 1 < n; ++t) {
    const auto& step = trace.steps[static_cast<std::size_t>(t)];
    int y = trace.stream.observations[static_cast<std::size_t>(t)].y;
    double s = sigmoid(-static_cast<double>(y) * step.margin);  // 1/(1+e^{y m})
    lhs += step.quad * s * s;
  }
  double exp_d = std::exp(trace.envelope.d_margin);
  double rhs = (1.0 + exp_d) / 2.0 * trace.d() *
               std::log1p(static_cast<double>(n - 1) * trace.p1 * trace.envelope.d_x *
                          trace.envelope.d_x);
  return make_report("prop2", lhs, rhs);
}

BoundReport lemma1_check(const LearnerTrace& trace, int max_n) {
  require_kind(trace, LearnerKind::kSos, "lemma1_check");
  const int n = trace.n();
  if (n > max_n) {
    throw ConfigError("lemma1_check: trace length " + std::to_string(n) +
                      " exceeds the O(n^2) cap " + std::to_string(max_n));
  }
  const double d_x = trace.envelope.d_x;
  const double exp_d = std::exp(trace.envelope.d_margin);
  const double factor = std::sqrt(static_cast<double>(trace.d())) * d_x * (1.0 + exp_d) / 4.0;

  // s_at(t, theta) = sum_{s<t} grad_s(theta) + theta / p1, by explicit
  // summation. Consecutive increments share the previous evaluation.
  auto s_at = [&](int t, const Vector& theta) {
    Vector s = theta / trace.p1;
    for (int u = 0; u + 1 < t; ++u) {
      s += loss_gradient(trace.stream.observations[static_cast<std::size_t>(u)], theta);
    }
    return s;
  };

  std::vector<StepDetail> details;
  details.reserve(static_cast<std::size_t>(std::max(0, n - 1)));
  Vector prev = s_at(1, trace.thetas[0]);
  for (int t = 1; t < n; ++t) {
    Vector next = s_at(t + 1, trace.thetas[static_cast<std::size_t>(t)]);
    const auto& step = trace.steps[static_cast<std::size_t>(t - 1)];
    int y = trace.stream.observations[static_cast<std::size_t>(t - 1)].y;
    double s = sigmoid(-static_cast<double>(y) * step.margin);
    details.push_back(StepDetail{t, (next - prev).norm(), factor * step.quad * s * s});
    prev = std::move(next);
  }
  return worst_step_report("lemma1", std::move(details));
}

double linearized_regret_expected(const LearnerTrace& trace, const Vector& theta_true) {
  require_dim(trace, theta_true, "linearized_regret_expected");
  double total = 0.0;
  for (int t = 0; t < trace.n(); ++t) {
    const Vector& x = trace.stream.observations[static_cast<std::size_t>(t)].x;
    Vector delta = theta_true - trace.thetas[static_cast<std::size_t>(t)];
    total += expected_gradient(x, trace.thetas[static_cast<std::size_t>(t)], theta_true).dot(delta);
  }
  return total;
}

BoundReport prop3_check(const LearnerTrace& trace, const Vector& theta_true) {
  require_dim(trace, theta_true, "prop3_check");
  std::vector<StepDetail> details;
  details.reserve(static_cast<std::size_t>(trace.n()));
  for (int t = 0; t < trace.n(); ++t) {
    const Vector& x = trace.stream.observations[static_cast<std::size_t>(t)].x;
    SandwichTerms s = sandwich_terms(x, trace.thetas[static_cast<std::size_t>(t)], theta_true);
    // Violation amount of either side of lo <= e <= hi.
    details.push_back(StepDetail{t + 1, std::max(s.lo - s.e, s.e - s.hi), 0.0});
  }
  return worst_step_report("prop3", std::move(details));
}

LocalizedSet localized_set(const LearnerTrace& trace, const Vector& theta_true, double eps) {
  require_dim(trace, theta_true, "localized_set");
  LocalizedSet set;
  for (int t = 0; t < trace.n(); ++t) {
    const Vector& x = trace.stream.observations[static_cast<std::size_t>(t)].x;
    double err = (trace.thetas[static_cast<std::size_t>(t)] - theta_true).dot(x);
    if (std::abs(err) <= eps) {
      set.indices.push_back(t + 1);
    }
  }
  set.cardinality = static_cast<int>(set.indices.size());
  return set;
}

BoundReport theorem3_check(const LearnerTrace& trace, const Vector& theta_true,
                           double eps, double alpha, double delta) {
  require_kind(trace, LearnerKind::kEkf, "theorem3_check");
  require_dim(trace, theta_true, "theorem3_check");
  if (!(alpha > 0.0) || !(delta > 0.0) || !(eps > 0.0)) {
    throw ConfigError("theorem3_check: eps, alpha, delta must be positive");
  }
  const int n = trace.n();
  const int d = trace.d();

  // v_t = (theta_t - theta_true)^T P_t^{-1} (theta_t - theta_true), with
  // P_t^{-1} rebuilt by accumulating the recorded curvature weights.
  std::vector<double> v(static_cast<std::size_t>(n) + 1);
  Matrix p_inv = Matrix::Identity(d, d) / trace.p1;
  for (int t = 0; t < n; ++t) {
    Vector diff = trace.thetas[static_cast<std::size_t>(t)] - theta_true;
    v[static_cast<std::size_t>(t)] = diff.dot(p_inv * diff);
    const Vector& x = trace.stream.observations[static_cast<std::size_t>(t)].x;
    p_inv += trace.steps[static_cast<std::size_t>(t)].weight * (x * x.transpose());
  }
  {
    Vector diff = trace.thetas[static_cast<std::size_t>(n)] - theta_true;
    v[static_cast<std::size_t>(n)] = diff.dot(p_inv * diff);
  }

  double lhs = 0.0;
  double telescope_outside = 0.0;
  for (int t = 0; t < n; ++t) {
    const Vector& x = trace.stream.observations[static_cast<std::size_t>(t)].x;
    const Vector& theta_t = trace.thetas[static_cast<std::size_t>(t)];
    Vector delta = theta_true - theta_t;
    double dx = delta.dot(x);
    if (std::abs(dx) <= eps) {
      double e_term = expected_gradient(x, theta_t, theta_true).dot(delta);
      double q = dx * dx * trace.steps[static_cast<std::size_t>(t)].weight;
      lhs += e_term - (0.5 + alpha) * q;
    } else {
      telescope_outside += v[static_cast<std::size_t>(t)] - v[static_cast<std::size_t>(t) + 1];
    }
  }

  double exp_d = std::exp(trace.envelope.d_margin);
  double rhs = (1.0 + exp_d) / alpha * std::log(1.0 / delta) +
               (1.0 + exp_d) / 4.0 * d *
                   std::log1p(n * trace.p1 * trace.envelope.d_x * trace.envelope.d_x) +
               theta_true.squaredNorm() / (2.0 * trace.p1) - 0.5 * telescope_outside;
  return make_report("theorem3", lhs, rhs);
}

BoundReport quadratic_variation_check(const LearnerTrace& trace, const Vector& theta_true) {
  require_dim(trace, theta_true, "quadratic_variation_check");
  double exp_d = std::exp(trace.envelope.d_margin);
  std::vector<StepDetail> details;
  details.reserve(static_cast<std::size_t>(trace.n()));
  for (int t = 0; t < trace.n(); ++t) {
    const Observation& obs = trace.stream.observations[static_cast<std::size_t>(t)];
    const Vector& theta_t = trace.thetas[static_cast<std::size_t>(t)];
    const auto& step = trace.steps[static_cast<std::size_t>(t)];
    double dx = (theta_true - theta_t).dot(obs.x);
    double p_plus = sigmoid(theta_true.dot(obs.x));
    // Realized linearized term for each label, and its two-point mean.
    double r_plus = dx * sigmoid(-step.margin);
    double r_minus = -dx * sigmoid(step.margin);
    double e_term = p_plus * r_plus + (1.0 - p_plus) * r_minus;
    double realized = obs.y == +1 ? r_plus : r_minus;
    double dm = e_term - realized;
    double second_moment = p_plus * (e_term - r_plus) * (e_term - r_plus) +
                           (1.0 - p_plus) * (e_term - r_minus) * (e_term - r_minus);
    details.push_back(StepDetail{t + 1, dm * dm + second_moment,
                                 2.0 * (1.0 + exp_d) * dx * dx * step.weight});
  }
  return worst_step_report("quad_variation", std::move(details));
}

AssumptionEstimates assumption_estimates(const std::vector<LearnerTrace>& replicates,
                                         std::optional<double> lambda_min_exx) {
  if (replicates.size() < 2) {
    throw InsufficientDataError("assumption_estimates: need at least 2 replicates, got " +
                                std::to_string(replicates.size()));
  }
  const int n = replicates.front().n();
  const int d = replicates.front().d();
  for (const auto& trace : replicates) {
    if (trace.n() != n || trace.d() != d) {
      throw Error("assumption_estimates: replicates disagree on n or d");
    }
  }
  const double count = static_cast<double>(replicates.size());

  AssumptionEstimates est;
  est.t_lambda_min.reserve(static_cast<std::size_t>(n));
  est.t2_mean_quad.reserve(static_cast<std::size_t>(n));
  est.m1_hat = std::numeric_limits<double>::infinity();
  est.m2_hat = 0.0;
  double d_x = 0.0;
  double d_margin = 0.0;
  for (const auto& trace : replicates) {
    d_x = std::max(d_x, trace.envelope.d_x);
    d_margin = std::max(d_margin, trace.envelope.d_margin);
  }

  for (int t = 0; t < n; ++t) {
    Matrix mean = Matrix::Zero(d, d);
    double mean_quad = 0.0;
    for (const auto& trace : replicates) {
      const auto& step = trace.steps[static_cast<std::size_t>(t)];
      const Vector& x = trace.stream.observations[static_cast<std::size_t>(t)].x;
      mean += step.p_x * x.transpose();  // P_{t+1} X_t X_t^T
      mean_quad += step.p_x.squaredNorm();  // X_t^T P_{t+1}^2 X_t
    }
    mean /= count;
    mean_quad /= count;
    // Per-sample products are asymmetric; the assumption concerns the
    // (symmetric) expectation, so symmetrize before taking lambda_min.
    double lam = min_eigenvalue_sym((mean + mean.transpose()) / 2.0);
    double scaled_lam = (t + 1) * lam;
    double scaled_quad = static_cast<double>(t + 1) * (t + 1) * mean_quad;
    est.t_lambda_min.push_back(scaled_lam);
    est.t2_mean_quad.push_back(scaled_quad);
    est.m1_hat = std::min(est.m1_hat, scaled_lam);
    est.m2_hat = std::max(est.m2_hat, scaled_quad);
  }

  if (lambda_min_exx && *lambda_min_exx > 0.0) {
    est.prop4_lower = *lambda_min_exx / ((1.0 + d_x * d_x) * (1.0 + d_x * d_x));
    double exp_d = std::exp(d_margin);
    est.prop4_upper_scale =
        16.0 * (1.0 + exp_d) * (1.0 + exp_d) / (*lambda_min_exx * *lambda_min_exx);
  }
  return est;
}

BoundReport error_decay_check(const std::vector<LearnerTrace>& replicates,
                              const Vector& theta_true) {
  if (replicates.size() < 2) {
    throw InsufficientDataError("error_decay_check: need at least 2 replicates, got " +
                                std::to_string(replicates.size()));
  }
  const int n = replicates.front().n();
  for (const auto& trace : replicates) {
    require_dim(trace, theta_true, "error_decay_check");
    if (trace.n() != n) throw Error("error_decay_check: replicates disagree on n");
  }
  auto mean_sq_error = [&](int t) {  // e(t) over theta_t, t in 1..n
    double total = 0.0;
    for (const auto& trace : replicates) {
      total += (trace.thetas[static_cast<std::size_t>(t - 1)] - theta_true).squaredNorm();
    }
    return total / static_cast<double>(replicates.size());
  };

  int t0 = std::max(1, n / 10);
  BoundReport report = make_report("decay", n * mean_sq_error(n), 2.0 * t0 * mean_sq_error(t0));
  for (int t = 1; t <= n; t *= 2) {
    report.step_details.push_back(StepDetail{t, t * mean_sq_error(t), 0.0});
  }
  return report;
}

double b_k_constant(int k, double m2, double p1, double d_x, double d_theta) {
  if (!(d_x > 0.0)) throw ConfigError("b_k_constant: D_X must be positive");
  if (!(p1 > 0.0)) throw ConfigError("b_k_constant: p1 must be positive");
  if (k < 1) throw ConfigError("b_k_constant: k must be a positive integer");
  double base = 4.0 * d_theta * d_theta + 2.0 * p1 * d_theta * d_x + p1 * p1 * d_x * d_x;
  return 5.0 * m2 / (p1 * p1 * d_x * d_x) * std::pow(base, k);
}

std::optional<int> select_k(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) return std::nullopt;
  double inverse = 1.0 / a;
  if (inverse > 1e9) return std::nullopt;  // k would be astronomically large
  int k = static_cast<int>(std::floor(inverse)) + 1;
  if (k >= 1 && 1.0 < k * a && k * a < 2.0) return k;
  return std::nullopt;
}

Theorem2Value theorem2_bound(int n, int d, double p1, const EnvelopeStats& envelope,
                             const Vector& theta_true, double m1, double m2, int k) {
  double exp_d = std::exp(envelope.d_margin);
  double d_x = envelope.d_x;
  double d_theta = std::max(envelope.d_theta, theta_true.norm());
  double a = std::exp(-envelope.d_margin) * m1 / (1.0 + exp_d);

  double first = 30.0 * (20.0 * (1.0 + exp_d) +
                         (1.0 + exp_d) / 4.0 * d * std::log1p(n * p1 * d_x * d_x) +
                         theta_true.squaredNorm() / (2.0 * p1));
  double per_step =
      2.0 * d_x * d_theta +
      30.0 * (2.0 * d_x * d_theta + 2.0 * d_x * d_x * d_theta * d_theta + d_x * d_x / 2.0);
  double factor =
      62.0 * d_x * d_theta + 60.0 * d_x * d_x * d_theta * d_theta + 15.0 * d_x * d_x;
  if (factor == 0.0) {
    // Degenerate envelopes: the non-localized term vanishes entirely and
    // the feasibility constraint on k never comes into play.
    return Theorem2Value{first, a, 0.0, k, per_step};
  }
  if (!(1.0 < k * a && k * a < 2.0)) {
    throw InfeasibleConstantError(
        "theorem2_bound: k = " + std::to_string(k) + " violates 1 < k a < 2 with a = " +
            std::to_string(a),
        a);
  }
  double b_k = b_k_constant(k, m2, p1, d_x, d_theta);
  // b_k grows like base^k and overflows for the large k a small decay
  // constant forces; the bound is then vacuously infinite (never NaN).
  if (!std::isfinite(b_k)) {
    return Theorem2Value{std::numeric_limits<double>::infinity(), a, b_k, k, per_step};
  }
  double second = factor * (1.0 + std::pow(4.0, k + 1) * std::pow(d_x, 2 * k) * b_k /
                                      (k * a - 1.0) * std::log(static_cast<double>(n)));
  return Theorem2Value{first + second, a, b_k, k, per_step};
}

double theorem4_bound(double eps, int k, double a, double b_k, double d_x, int n) {
  if (!(1.0 < k * a && k * a < 2.0)) {
    throw InfeasibleConstantError(
        "theorem4_bound: k = " + std::to_string(k) + " violates 1 < k a < 2 with a = " +
            std::to_string(a),
        a);
  }
  if (!(eps > 0.0)) throw ConfigError("theorem4_bound: eps must be positive");
  if (!std::isfinite(b_k)) return std::numeric_limits<double>::infinity();
  return 1.0 + 4.0 * std::pow(d_x, 2 * k) * b_k /
                   (std::pow(eps, 2 * k) * (k * a - 1.0)) * std::log(static_cast<double>(n));
}

std::vector<double> cumulative_expected_regret_curve(const LearnerTrace& trace,
                                                     const Vector& theta_true) {
  require_dim(trace, theta_true, "cumulative_expected_regret_curve");
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(trace.n()));
  double total = 0.0;
  for (int t = 0; t < trace.n(); ++t) {
    const Vector& x = trace.stream.observations[static_cast<std::size_t>(t)].x;
    total += expected_loss(x, trace.thetas[static_cast<std::size_t>(t)], theta_true) -
             expected_loss(x, theta_true, theta_true);
    curve.push_back(total);
  }
  return curve;
}

double cumulative_expected_regret(const LearnerTrace& trace, const Vector& theta_true) {
  auto curve = cumulative_expected_regret_curve(trace, theta_true);
  return curve.empty() ? 0.0 : curve.back();
}

}  // namespace sosekf
