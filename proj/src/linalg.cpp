#include "sosekf/linalg.hpp"

#include <cmath>
#include <optional>
#include <utility>

namespace sosekf {
namespace {

// Lower-triangular Cholesky factor of m, or nullopt if some pivot fails
// the floor. Written out by hand so the pivot acceptance rule is ours,
// not a library default.
std::optional<Matrix> cholesky_lower(const Matrix& m, double pivot_floor) {
  const Eigen::Index n = m.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > pivot_floor) || !std::isfinite(pivot)) {
      return std::nullopt;
    }
    l(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = m(i, j) - l.row(i).head(j).dot(l.row(j).head(j));
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

}  // namespace

SpdMatrix::SpdMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) {
    throw DimensionError("SpdMatrix: matrix must be square, got " +
                         std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()));
  }
  if (!m_.allFinite()) {
    throw NumericError("SpdMatrix: non-finite entry");
  }
  m_ = ((m_ + m_.transpose()) / 2.0).eval();
}

SpdMatrix SpdMatrix::identity(Eigen::Index dim, double scale) {
  return SpdMatrix(Matrix::Identity(dim, dim) * scale);
}

SpdMatrix rank_one_downdate(const SpdMatrix& p, const Vector& x, double w) {
  if (x.size() != p.dim()) {
    throw DimensionError("rank_one_downdate: vector length " + std::to_string(x.size()) +
                         " vs matrix dim " + std::to_string(p.dim()));
  }
  if (!std::isfinite(w) || w < 0.0) {
    throw NumericError("rank_one_downdate: weight must be finite and nonnegative");
  }
  if (w == 0.0) {
    return p;
  }
  Vector px = p.mat() * x;
  double denom = 1.0 + w * x.dot(px);
  Matrix next = p.mat() - (w / denom) * (px * px.transpose());
  return SpdMatrix(std::move(next));
}

double quadratic_form(const SpdMatrix& p, const Vector& x) {
  if (x.size() != p.dim()) {
    throw DimensionError("quadratic_form: vector length " + std::to_string(x.size()) +
                         " vs matrix dim " + std::to_string(p.dim()));
  }
  return x.dot(p.mat() * x);
}

Vector solve_spd(const SpdMatrix& a, const Vector& b) {
  if (b.size() != a.dim()) {
    throw DimensionError("solve_spd: rhs length " + std::to_string(b.size()) +
                         " vs matrix dim " + std::to_string(a.dim()));
  }
  auto l = cholesky_lower(a.mat(), 0.0);
  if (!l) {
    throw NotSpdError("solve_spd: matrix is not positive definite");
  }
  // Forward then backward substitution: L z = b, L^T x = z.
  Vector x = l->triangularView<Eigen::Lower>().solve(b);
  l->transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

bool is_spd(const SpdMatrix& p) {
  return cholesky_lower(p.mat(), tol::kPivotFloor).has_value();
}

double max_eigenvalue_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double min_eigenvalue_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace sosekf
