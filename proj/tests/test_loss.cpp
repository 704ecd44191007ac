#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "sosekf/loss.hpp"

using namespace sosekf;

namespace {

Vector random_vector(int d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = gauss(rng);
  return v;
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("observation validates label and finiteness") {
  Vector x = Vector::Constant(2, 1.0);
  CHECK_NOTHROW(Observation(x, 1));
  CHECK_NOTHROW(Observation(x, -1));
  CHECK_THROWS_AS(Observation(x, 0), Error);
  CHECK_THROWS_AS(Observation(x, 2), Error);
  Vector bad(1);
  bad(0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Observation(bad, 1), NumericError);
}

TEST_CASE("sigmoid scalar values and saturation") {
  CHECK(sigmoid(0.0) == 0.5);
  // 1/(1+e^{-1}) evaluated at extended precision.
  CHECK(sigmoid(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  double tail = sigmoid(-800.0);
  CHECK(std::isfinite(tail));
  CHECK(tail >= 0.0);
  CHECK(tail <= 1e-300);
  CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("sigmoid symmetry across the full range") {
  for (double z : {0.0, 1e-8, 0.5, 1.0, 5.0, 37.0, 100.0, 700.0, 1e6}) {
    CHECK(std::abs(sigmoid(z) + sigmoid(-z) - 1.0) <= 1e-15);
  }
}

TEST_CASE("log1p_exp stable forms") {
  CHECK(log1p_exp(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(log1p_exp(800.0) == doctest::Approx(800.0).epsilon(1e-15));
  CHECK(log1p_exp(-800.0) >= 0.0);
  CHECK(log1p_exp(-800.0) <= 1e-300);
}

TEST_CASE("logistic loss scalar values") {
  Vector x = Vector::Constant(3, 1.0);
  Vector zero = Vector::Zero(3);
  CHECK(logistic_loss(Observation(x, 1), zero) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(logistic_loss(Observation(x, -1), zero) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));

  // Confident and correct: tiny but strictly positive.
  double small = logistic_loss_margin(1, 50.0);
  CHECK(small > 0.0);
  CHECK(small < 1e-20);

  // log(1+e) evaluated at extended precision.
  CHECK(logistic_loss_margin(-1, 1.0) == doctest::Approx(1.3132616875182228).epsilon(1e-12));

  CHECK_THROWS_AS(logistic_loss(Observation(x, 1), Vector::Zero(2)), DimensionError);
}

TEST_CASE("loss gradient closed cases") {
  std::mt19937_64 rng(7);
  Vector x = random_vector(4, rng);
  Vector zero = Vector::Zero(4);
  Vector g_plus = loss_gradient(Observation(x, 1), zero);
  Vector g_minus = loss_gradient(Observation(x, -1), zero);
  CHECK((g_plus + 0.5 * x).norm() <= 1e-15);
  CHECK((g_minus - 0.5 * x).norm() <= 1e-15);

  // Saturation: a huge correct margin kills the gradient.
  Vector big = Vector::Constant(4, 0.0);
  big(0) = 800.0 / x(0);
  CHECK(loss_gradient(Observation(x, 1), big).norm() <= 1e-15 * x.norm() + 1e-300);
}

TEST_CASE("loss gradient matches central finite differences") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> label(0, 1);
  const double h = 1e-6;
  for (int trial = 0; trial < 1000; ++trial) {
    int d = 1 + static_cast<int>(rng() % 5);
    Vector x = random_vector(d, rng, 2.0);
    Vector theta = random_vector(d, rng, 2.0);
    if (std::abs(theta.dot(x)) > 20.0) theta *= 20.0 / std::abs(theta.dot(x));
    Observation obs(x, label(rng) == 0 ? -1 : 1);
    Vector grad = loss_gradient(obs, theta);
    for (int i = 0; i < d; ++i) {
      double fd = central_difference(
          [&](double v) {
            Vector t = theta;
            t(i) = v;
            return logistic_loss(obs, t);
          },
          theta(i), h);
      REQUIRE(std::abs(grad(i) - fd) <= 1e-6);
    }
  }
}

TEST_CASE("hessian weight scalar values and symmetry") {
  CHECK(hessian_weight_margin(0.0) == 0.25);
  // sigmoid(2) * sigmoid(-2) evaluated at extended precision.
  CHECK(hessian_weight_margin(2.0) == doctest::Approx(0.10499358540350652).epsilon(1e-12));
  for (double m : {0.3, 1.0, 4.0, 35.0, 100.0}) {
    CHECK(hessian_weight_margin(m) == hessian_weight_margin(-m));  // bit-equal
    CHECK(hessian_weight_margin(m) > 0.0);
    CHECK(hessian_weight_margin(m) <= 0.25);
  }
}

TEST_CASE("hessian weight matches the second directional difference") {
  std::mt19937_64 rng(19);
  const double h = 1e-4;
  for (int trial = 0; trial < 200; ++trial) {
    int d = 1 + static_cast<int>(rng() % 4);
    Vector x = random_vector(d, rng);
    Vector theta = random_vector(d, rng);
    Vector v = random_vector(d, rng);
    Observation obs(x, 1);
    auto along = [&](double s) { return logistic_loss(obs, theta + s * v); };
    double second = (along(h) - 2.0 * along(0.0) + along(-h)) / (h * h);
    double vx = v.dot(x);
    REQUIRE(std::abs(hessian_weight(x, theta) * vx * vx - second) <= 1e-4);
  }
}

TEST_CASE("expected loss is the exhaustive two-point sum") {
  std::mt19937_64 rng(23);
  Vector zero1 = Vector::Zero(1);
  CHECK(expected_loss(Vector::Constant(1, 1.0), zero1, zero1) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));

  for (int trial = 0; trial < 100; ++trial) {
    int d = 1 + static_cast<int>(rng() % 4);
    Vector x = random_vector(d, rng);
    Vector theta = random_vector(d, rng);
    Vector theta_true = random_vector(d, rng);
    double p_plus = sigmoid(theta_true.dot(x));
    double by_hand = p_plus * logistic_loss(Observation(x, 1), theta) +
                     (1.0 - p_plus) * logistic_loss(Observation(x, -1), theta);
    REQUIRE(expected_loss(x, theta, theta_true) == doctest::Approx(by_hand).epsilon(1e-14));
  }
}

TEST_CASE("expected loss is minimized at the true margin") {
  Vector x = Vector::Constant(1, 1.0);
  Vector theta_true = Vector::Constant(1, 0.7);
  double best = std::numeric_limits<double>::infinity();
  double argmin = 0.0;
  for (double m = -3.0; m <= 3.0; m += 0.01) {
    double value = expected_loss(x, Vector::Constant(1, m), theta_true);
    if (value < best) {
      best = value;
      argmin = m;
    }
  }
  CHECK(std::abs(argmin - 0.7) <= 0.005 + 1e-12);
}

TEST_CASE("expected gradient vanishes at the truth") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    int d = 1 + static_cast<int>(rng() % 4);
    Vector x = random_vector(d, rng);
    Vector theta_true = random_vector(d, rng);
    CHECK(expected_gradient(x, theta_true, theta_true).norm() <= 1e-14 * (1.0 + x.norm()));
  }
}

TEST_CASE("expected gradient matches a million-label Monte Carlo mean") {
  std::mt19937_64 rng(31);
  Vector x(2);
  x << 0.8, -0.6;
  Vector theta(2);
  theta << 0.4, 0.2;
  Vector theta_true(2);
  theta_true << -0.3, 0.9;

  const int samples = 1000000;
  double m = theta.dot(x);
  double m_true = theta_true.dot(x);
  std::bernoulli_distribution label(sigmoid(m_true));
  // The vector is x times a scalar factor; running the Monte Carlo on
  // the factor keeps the standard error exact per coordinate.
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    double y = label(rng) ? 1.0 : -1.0;
    double factor = y * sigmoid(-y * m);
    sum += factor;
    sum_sq += factor * factor;
  }
  double mc_mean = sum / samples;
  double mc_var = sum_sq / samples - mc_mean * mc_mean;
  double se = std::sqrt(mc_var / samples);

  Vector exact = expected_gradient(x, theta, theta_true);
  double exact_factor = exact(0) / x(0);
  CHECK(exact(1) / x(1) == doctest::Approx(exact_factor).epsilon(1e-12));
  CHECK(std::abs(mc_mean - exact_factor) <= 3.0 * se);
}

TEST_CASE("expected gradient is minus the gradient of expected loss") {
  std::mt19937_64 rng(37);
  const double h = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    int d = 1 + static_cast<int>(rng() % 4);
    Vector x = random_vector(d, rng);
    Vector theta = random_vector(d, rng);
    Vector theta_true = random_vector(d, rng);
    Vector eg = expected_gradient(x, theta, theta_true);
    for (int i = 0; i < d; ++i) {
      double fd = central_difference(
          [&](double v) {
            Vector t = theta;
            t(i) = v;
            return expected_loss(x, t, theta_true);
          },
          theta(i), h);
      REQUIRE(std::abs(eg(i) + fd) <= 1e-6);
    }
  }
}

TEST_CASE("sandwich terms at the degenerate point and a hand case") {
  Vector one = Vector::Constant(1, 1.0);
  SandwichTerms zero = sandwich_terms(one, one, one);
  CHECK(zero.e == 0.0);
  CHECK(zero.q == 0.0);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi == 0.0);

  // d=1, x=1, theta=0, theta_true=1: Q = hessian_weight(0) = 1/4 and
  // E is the two-term expectation (sigmoid(1) - sigmoid(-1))/2.
  SandwichTerms s = sandwich_terms(one, Vector::Zero(1), one);
  CHECK(s.q == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(s.lo == doctest::Approx(0.25 * std::exp(-1.0)).epsilon(1e-14));
  CHECK(s.hi == doctest::Approx(0.25 * std::exp(1.0)).epsilon(1e-14));
  double expected_e = (sigmoid(1.0) - sigmoid(-1.0)) / 2.0;
  CHECK(s.e == doctest::Approx(expected_e).epsilon(1e-14));
  CHECK(s.lo <= s.e);
  CHECK(s.e <= s.hi);
}

TEST_CASE("sandwich ordering holds across a random sweep") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10000; ++trial) {
    int d = 1 + static_cast<int>(rng() % 5);
    Vector x = random_vector(d, rng, 1.5);
    Vector theta = random_vector(d, rng, 1.5);
    Vector theta_true = random_vector(d, rng, 1.5);
    SandwichTerms s = sandwich_terms(x, theta, theta_true);
    REQUIRE(s.lo <= s.e + 1e-12);
    REQUIRE(s.e <= s.hi + 1e-12);
    REQUIRE(s.q >= 0.0);
  }
}
