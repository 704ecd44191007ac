#ifndef SOSEKF_LOSS_HPP
#define SOSEKF_LOSS_HPP

#include "sosekf/linalg.hpp"

namespace sosekf {

/// One observed pair (X_t, y_t) with y in {-1, +1}.
struct Observation {
  Vector x;
  int y;

  Observation(Vector x_in, int y_in);
};

/// 1/(1+e^{-z}), overflow-safe via a branch on the sign of z.
double sigmoid(double z);

/// log(1 + e^z) without overflow: z + log1p(e^{-z}) for z > 0.
double log1p_exp(double z);

/// Logistic loss log(1 + e^{-y m}) from the margin m = theta^T x.
double logistic_loss_margin(int y, double margin);
double logistic_loss(const Observation& obs, const Vector& theta);

/// Gradient of the logistic loss: -y x / (1 + e^{y theta^T x}).
Vector loss_gradient(const Observation& obs, const Vector& theta);

/// Curvature weight 1/((1+e^m)(1+e^{-m})) = sigmoid(m) sigmoid(-m),
/// computed from u = e^{-|m|} so that +m and -m give bit-equal results.
/// Lies in (0, 1/4].
double hessian_weight_margin(double margin);
double hessian_weight(const Vector& x, const Vector& theta);

/// Expected logistic loss under y ~ p(y | x, theta_true): the exact
/// two-point sum over y in {-1, +1}.
double expected_loss(const Vector& x, const Vector& theta, const Vector& theta_true);

/// E[y x / (1 + e^{y theta^T x})] under the same law; this is the
/// negative of the gradient of expected_loss in theta. Zero at
/// theta = theta_true.
Vector expected_gradient(const Vector& x, const Vector& theta, const Vector& theta_true);

/// The sandwich around the expected linearized step. With
/// delta = theta_true - theta and m = theta^T x:
///   e = expected_gradient(x, theta, theta_true) . delta,
///   q = (delta^T x)^2 * hessian_weight_margin(m),
///   lo = e^{-|delta^T x|} q,   hi = e^{|delta^T x|} q,
/// and lo <= e <= hi (strictly except at delta^T x = 0).
struct SandwichTerms {
  double e;
  double q;
  double lo;
  double hi;
};

SandwichTerms sandwich_terms(const Vector& x, const Vector& theta, const Vector& theta_true);

}  // namespace sosekf

#endif  // SOSEKF_LOSS_HPP
