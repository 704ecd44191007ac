#ifndef SOSEKF_BOUNDS_HPP
#define SOSEKF_BOUNDS_HPP

#include <optional>
#include <string>
#include <vector>

#include "sosekf/trace.hpp"

namespace sosekf {

/// One per-step inequality instance inside an aggregated check.
struct StepDetail {
  int t;
  double lhs;
  double rhs;
};

/// Uniform verdict record for every checked statement. For per-step
/// checks, (lhs, rhs) are taken at the step with the worst lhs - rhs
/// and step_details carries the full list.
struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
  double slack = 0.0;  // rhs - lhs
  std::vector<StepDetail> step_details;
};

/// satisfied == (lhs <= rhs + 1e-9 * (1 + |rhs|)).
BoundReport make_report(std::string name, double lhs, double rhs);

/// sum_t [ loss_t(y_t, theta_t) - loss_t(y_t, theta) ].
double regret_vs_comparator(const LearnerTrace& trace, const Vector& theta);

/// Closed-form adversarial regret bound for the semi-online algorithm:
///   (sqrt(d) D_X (D_theta + ||theta||)(1+e^D)/4 + 1) ((1+e^D)/2) d log(1+(n-1) p1 D_X^2)
///   + (||theta_1||^2 + ||theta||^2)/(2 p1) + D_X (D_theta + ||theta||).
double theorem1_rhs(int n, int d, double p1, const EnvelopeStats& envelope,
                    const Vector& theta, const Vector& theta1);

/// Regret of an SOS trace against a comparator vs the closed form above.
BoundReport theorem1_check(const LearnerTrace& trace, const Vector& theta);

/// sum_{t<=n-1} X_t^T P_{t+1} X_t / (1+e^{y_t m_t})^2
///   <= ((1+e^D)/2) d log(1+(n-1) p1 D_X^2)   for SOS traces.
BoundReport prop2_check(const LearnerTrace& trace);

/// Per-step increment bound on S_t(theta) = sum_{s<t} grad_s(theta) + theta/p1:
///   ||S_{t+1}(theta_{t+1}) - S_t(theta_t)||
///     <= (sqrt(d) D_X (1+e^D)/4) X_t^T P_{t+1} X_t / (1+e^{y_t m_t})^2.
/// Recomputes S_t by explicit summation (O(n^2 d) total); refuses
/// traces longer than max_n.
BoundReport lemma1_check(const LearnerTrace& trace, int max_n = 2000);

/// sum_t expected_gradient(X_t, theta_t, theta_true) . (theta_true - theta_t),
/// the exact-expectation linearized regret. Each summand is >= 0.
double linearized_regret_expected(const LearnerTrace& trace, const Vector& theta_true);

/// Per-step sandwich lo_t <= E_t <= hi_t on a well-specified run.
BoundReport prop3_check(const LearnerTrace& trace, const Vector& theta_true);

struct LocalizedSet {
  std::vector<int> indices;  // steps t with |(theta_t - theta_true)^T X_t| <= eps
  int cardinality = 0;
};

LocalizedSet localized_set(const LearnerTrace& trace, const Vector& theta_true, double eps);

/// High-probability localized bound:
///   sum_{t in T_eps} (E_t - (1/2+alpha) Q_t)
///     <= (1+e^D)/alpha log(1/delta) + (1+e^D)/4 d log(1+n p1 D_X^2)
///        + ||theta_true||^2/(2 p1)
///        - 1/2 sum_{t not in T_eps} (v_t - v_{t+1}),
/// where v_t = (theta_t - theta_true)^T P_t^{-1} (theta_t - theta_true)
/// is rebuilt by accumulating the recorded curvature weights.
BoundReport theorem3_check(const LearnerTrace& trace, const Vector& theta_true,
                           double eps, double alpha, double delta);

/// Per-step martingale-increment inequality:
///   (dM_t)^2 + E_t[(dM_t)^2] <= 2 (1+e^D) Q_t,
/// with dM_t the expected-minus-realized linearized term and the
/// conditional second moment taken as the exact two-point sum.
BoundReport quadratic_variation_check(const LearnerTrace& trace, const Vector& theta_true);

/// Empirical curvature constants from iid replicates:
///   m1_hat = min_t t * lambda_min( sym mean_r P_{t+1} X_t X_t^T ),
///   m2_hat = max_t t^2 * mean_r X_t^T P_{t+1}^2 X_t.
/// When lambda_min_exx (the smallest eigenvalue of E[X X^T]) is known,
/// the analytic comparison values are filled in:
///   prop4_lower = lambda_min_exx / (1 + D_X^2)^2,
///   prop4_upper_scale = 16 (1+e^D)^2 / lambda_min_exx^2.
struct AssumptionEstimates {
  double m1_hat = 0.0;
  double m2_hat = 0.0;
  std::vector<double> t_lambda_min;   // t * lambda_min curve, index t-1
  std::vector<double> t2_mean_quad;   // t^2 * mean quad curve, index t-1
  std::optional<double> prop4_lower;
  std::optional<double> prop4_upper_scale;
};

AssumptionEstimates assumption_estimates(const std::vector<LearnerTrace>& replicates,
                                         std::optional<double> lambda_min_exx = std::nullopt);

/// O(1/t) decay of the mean squared error: with e(t) the mean over
/// replicates of ||theta_t - theta_true||^2, checks
///   n * e(n) <= 2 * (n/10) * e(n/10).
/// step_details carries the t * e(t) curve at powers of two.
BoundReport error_decay_check(const std::vector<LearnerTrace>& replicates,
                              const Vector& theta_true);

/// b_k = (5 M2 / (p1^2 D_X^2)) (4 D_theta^2 + 2 p1 D_theta D_X + p1^2 D_X^2)^k.
double b_k_constant(int k, double m2, double p1, double d_x, double d_theta);

/// Smallest positive integer k with 1 < k a < 2, if one exists.
std::optional<int> select_k(double a);

struct Theorem2Value {
  double value;
  double a;    // e^{-D} m1 / (1+e^D)
  double b_k;
  int k;
  double per_step_constant;  // 2 D_X D_theta + 30 (2 D_X D_theta + 2 D_X^2 D_theta^2 + D_X^2/2)
};

/// Expected-regret bound
///   30 (20 (1+e^D) + (1+e^D)/4 d log(1+n p1 D_X^2) + ||theta_true||^2/(2 p1))
///   + (62 D_X D_theta + 60 D_X^2 D_theta^2 + 15 D_X^2)
///     (1 + 4^{k+1} D_X^{2k} b_k / (k a - 1) log n),
/// with D_theta taken as max(envelope.d_theta, ||theta_true||).
/// Throws InfeasibleConstantError unless 1 < k a < 2.
Theorem2Value theorem2_bound(int n, int d, double p1, const EnvelopeStats& envelope,
                             const Vector& theta_true, double m1, double m2, int k);

/// E[n - Card(T_eps)] <= 1 + 4 D_X^{2k} b_k / (eps^{2k} (k a - 1)) log n.
double theorem4_bound(double eps, int k, double a, double b_k, double d_x, int n);

/// Prefix sums of expected_loss(X_t, theta_t) - expected_loss(X_t, theta_true).
std::vector<double> cumulative_expected_regret_curve(const LearnerTrace& trace,
                                                     const Vector& theta_true);
double cumulative_expected_regret(const LearnerTrace& trace, const Vector& theta_true);

}  // namespace sosekf

#endif  // SOSEKF_BOUNDS_HPP
