#include "sosekf/loss.hpp"

#include <cmath>
#include <utility>

namespace sosekf {
namespace {

void require_same_dim(const Vector& a, const Vector& b, const char* where) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(where) + ": dimension mismatch " +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

}  // namespace

Observation::Observation(Vector x_in, int y_in) : x(std::move(x_in)), y(y_in) {
  if (y != 1 && y != -1) {
    throw Error("Observation: label must be -1 or +1, got " + std::to_string(y));
  }
  if (!x.allFinite()) {
    throw NumericError("Observation: non-finite feature entry");
  }
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

double log1p_exp(double z) {
  if (z > 0.0) {
    return z + std::log1p(std::exp(-z));
  }
  return std::log1p(std::exp(z));
}

double logistic_loss_margin(int y, double margin) {
  return log1p_exp(-static_cast<double>(y) * margin);
}

double logistic_loss(const Observation& obs, const Vector& theta) {
  require_same_dim(obs.x, theta, "logistic_loss");
  return logistic_loss_margin(obs.y, theta.dot(obs.x));
}

Vector loss_gradient(const Observation& obs, const Vector& theta) {
  require_same_dim(obs.x, theta, "loss_gradient");
  double ym = static_cast<double>(obs.y) * theta.dot(obs.x);
  // 1/(1+e^{ym}) = sigmoid(-ym)
  return (-static_cast<double>(obs.y) * sigmoid(-ym)) * obs.x;
}

double hessian_weight_margin(double margin) {
  double u = std::exp(-std::abs(margin));
  return u / ((1.0 + u) * (1.0 + u));
}

double hessian_weight(const Vector& x, const Vector& theta) {
  require_same_dim(x, theta, "hessian_weight");
  return hessian_weight_margin(theta.dot(x));
}

double expected_loss(const Vector& x, const Vector& theta, const Vector& theta_true) {
  require_same_dim(x, theta, "expected_loss");
  require_same_dim(x, theta_true, "expected_loss");
  double m = theta.dot(x);
  double m_true = theta_true.dot(x);
  return sigmoid(m_true) * logistic_loss_margin(+1, m) +
         sigmoid(-m_true) * logistic_loss_margin(-1, m);
}

Vector expected_gradient(const Vector& x, const Vector& theta, const Vector& theta_true) {
  require_same_dim(x, theta, "expected_gradient");
  require_same_dim(x, theta_true, "expected_gradient");
  double m = theta.dot(x);
  double m_true = theta_true.dot(x);
  // E[y/(1+e^{ym})] = p(+1)/(1+e^m) - p(-1)/(1+e^{-m})
  double coeff = sigmoid(m_true) * sigmoid(-m) - sigmoid(-m_true) * sigmoid(m);
  return coeff * x;
}

SandwichTerms sandwich_terms(const Vector& x, const Vector& theta, const Vector& theta_true) {
  require_same_dim(x, theta, "sandwich_terms");
  require_same_dim(x, theta_true, "sandwich_terms");
  Vector delta = theta_true - theta;
  double dx = delta.dot(x);
  double q = dx * dx * hessian_weight(x, theta);
  double e = expected_gradient(x, theta, theta_true).dot(delta);
  return SandwichTerms{e, q, std::exp(-std::abs(dx)) * q, std::exp(std::abs(dx)) * q};
}

}  // namespace sosekf
