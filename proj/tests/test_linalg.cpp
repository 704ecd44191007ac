#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "sosekf/data.hpp"
#include "sosekf/linalg.hpp"
#include "sosekf/trace.hpp"

using namespace sosekf;

namespace {

Matrix random_spd(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix b(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) b(i, j) = gauss(rng);
  return b * b.transpose() + 0.1 * Matrix::Identity(d, d);
}

Vector random_vector(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = gauss(rng);
  return v;
}

// Independent oracle: form P^{-1} + w x x^T explicitly and invert it
// with Eigen's LU, a different algorithm than the recursion under test.
Matrix downdate_oracle(const Matrix& p, const Vector& x, double w) {
  Matrix inner = p.inverse() + w * x * x.transpose();
  return inner.inverse();
}

double rel_error(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / (1.0 + b.norm());
}

}  // namespace

TEST_CASE("spd matrix construction symmetrizes and validates") {
  Matrix m(2, 2);
  m << 1.0, 0.3, 0.1, 2.0;
  SpdMatrix p(m);
  CHECK(p(0, 1) == p(1, 0));
  CHECK(p(0, 1) == doctest::Approx(0.2).epsilon(1e-15));

  CHECK_THROWS_AS(SpdMatrix{Matrix::Zero(2, 3)}, DimensionError);

  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(SpdMatrix{bad}, NumericError);

  SpdMatrix scaled = SpdMatrix::identity(3, 2.5);
  CHECK(scaled.dim() == 3);
  CHECK(scaled(0, 0) == 2.5);
  CHECK(scaled(0, 1) == 0.0);
}

TEST_CASE("rank_one_downdate identity case with unit vector") {
  SpdMatrix p = SpdMatrix::identity(2);
  Vector e1 = Vector::Zero(2);
  e1(0) = 1.0;
  SpdMatrix r = rank_one_downdate(p, e1, 1.0);
  CHECK(r(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r(0, 1) == 0.0);
}

TEST_CASE("rank_one_downdate with zero weight is a bit-exact no-op") {
  std::mt19937_64 rng(11);
  SpdMatrix p(random_spd(4, rng));
  Vector x = random_vector(4, rng);
  SpdMatrix r = rank_one_downdate(p, x, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(r(i, j) == p(i, j));
}

TEST_CASE("rank_one_downdate matches the dense-inverse oracle at 3x3") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    SpdMatrix p(random_spd(3, rng));
    Vector x = random_vector(3, rng);
    SpdMatrix r = rank_one_downdate(p, x, 0.25);
    Matrix expected = downdate_oracle(p.mat(), x, 0.25);
    CHECK(rel_error(r.mat(), expected) < 1e-10);
  }
}

TEST_CASE("rank_one_downdate oracle sweep over dimensions up to 8") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> weight(0.0, 2.0);
  int cases = 0;
  for (int d = 1; d <= 8; ++d) {
    for (int trial = 0; trial < 125; ++trial) {
      SpdMatrix p(random_spd(d, rng));
      Vector x = random_vector(d, rng);
      double w = weight(rng);
      SpdMatrix r = rank_one_downdate(p, x, w);
      Matrix expected = downdate_oracle(p.mat(), x, w);
      REQUIRE(rel_error(r.mat(), expected) < 1e-8);

      // The downdate never increases the matrix: P - result is the
      // rank-one term c (Px)(Px)^T with c >= 0, so its spectrum is
      // nonnegative up to rounding.
      Matrix diff = p.mat() - r.mat();
      REQUIRE(min_eigenvalue_sym(diff) >= -1e-12);
      REQUIRE(max_eigenvalue_sym(diff) >= -1e-12);

      // Symmetry is exact, not approximate.
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) REQUIRE(r(i, j) == r(j, i));
      ++cases;
    }
  }
  CHECK(cases == 1000);
}

TEST_CASE("rank_one_downdate rejects bad input") {
  SpdMatrix p = SpdMatrix::identity(2);
  CHECK_THROWS_AS(rank_one_downdate(p, Vector::Zero(3), 1.0), DimensionError);
  CHECK_THROWS_AS(rank_one_downdate(p, Vector::Zero(2), -0.5), NumericError);
  Vector bad = Vector::Zero(2);
  bad(1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(rank_one_downdate(p, bad, 1.0), NumericError);
}

TEST_CASE("quadratic_form closed cases and naive oracle") {
  SpdMatrix eye = SpdMatrix::identity(2);
  Vector v(2);
  v << 3.0, 4.0;
  CHECK(quadratic_form(eye, v) == doctest::Approx(25.0).epsilon(1e-15));

  Matrix d2(2, 2);
  d2 << 2.0, 0.0, 0.0, 1.0;
  Vector e1(2);
  e1 << 1.0, 0.0;
  CHECK(quadratic_form(SpdMatrix(d2), e1) == doctest::Approx(2.0).epsilon(1e-15));

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    int d = 1 + static_cast<int>(rng() % 6);
    SpdMatrix p(random_spd(d, rng));
    Vector x = random_vector(d, rng);
    double naive = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) naive += x(i) * p(i, j) * x(j);
    CHECK(quadratic_form(p, x) == doctest::Approx(naive).epsilon(1e-12));
    CHECK(quadratic_form(p, x) >= -1e-12);
  }

  CHECK_THROWS_AS(quadratic_form(eye, Vector::Zero(3)), DimensionError);
}

TEST_CASE("solve_spd exact cases, residual contract, and oracle") {
  Vector b(2);
  b << 2.0, 4.0;
  CHECK((solve_spd(SpdMatrix::identity(2), b) - b).norm() == 0.0);

  Matrix d2(2, 2);
  d2 << 2.0, 0.0, 0.0, 4.0;
  Vector x = solve_spd(SpdMatrix(d2), b);
  CHECK(x(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(x(1) == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 30; ++trial) {
    SpdMatrix a(random_spd(5, rng));
    Vector rhs = random_vector(5, rng);
    Vector sol = solve_spd(a, rhs);
    CHECK((a.mat() * sol - rhs).norm() <= tol::kSolveResidual * (1.0 + rhs.norm()));
    Vector oracle = a.mat().inverse() * rhs;
    CHECK((sol - oracle).norm() <= 1e-8 * (1.0 + oracle.norm()));
  }

  Matrix indef(2, 2);
  indef << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(solve_spd(SpdMatrix(indef), b), NotSpdError);
}

TEST_CASE("is_spd accepts the identity and rejects an indefinite diagonal") {
  CHECK(is_spd(SpdMatrix::identity(3)));
  Matrix indef(2, 2);
  indef << 1.0, 0.0, 0.0, -1.0;
  CHECK_FALSE(is_spd(SpdMatrix(indef)));
}

TEST_CASE("state matrices from a filter run stay positive definite") {
  StreamSpec spec;
  spec.n = 40;
  spec.d = 3;
  spec.scheme = Scheme::kWellspecified;
  spec.theta_true = Vector::Constant(3, 0.5);
  spec.seed = 5;
  TraceOptions options;
  options.store_p_history = true;
  LearnerTrace trace = run_trace(generate(spec), LearnerKind::kEkf, options);
  REQUIRE(trace.p_history.size() == 40);
  for (const SpdMatrix& p : trace.p_history) CHECK(is_spd(p));
}

TEST_CASE("repeated downdates are monotone in the Loewner order") {
  std::mt19937_64 rng(41);
  SpdMatrix p = SpdMatrix::identity(4, 2.0);
  for (int step = 0; step < 25; ++step) {
    Vector x = random_vector(4, rng);
    SpdMatrix next = rank_one_downdate(p, x, 0.25);
    CHECK(min_eigenvalue_sym(p.mat() - next.mat()) >= -tol::kLoewnerSlack);
    p = next;
  }
  CHECK(is_spd(p));
}

TEST_CASE("extreme symmetric eigenvalues on a known diagonal") {
  Matrix m(3, 3);
  m.setZero();
  m(0, 0) = -2.0;
  m(1, 1) = 0.5;
  m(2, 2) = 7.0;
  CHECK(max_eigenvalue_sym(m) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(min_eigenvalue_sym(m) == doctest::Approx(-2.0).epsilon(1e-12));
}
