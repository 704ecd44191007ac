#ifndef SOSEKF_LINALG_HPP
#define SOSEKF_LINALG_HPP

#include <Eigen/Dense>

#include "sosekf/errors.hpp"

namespace sosekf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Numeric tolerances shared by the whole project. Fixed here so every
// module compares against the same constants.
namespace tol {
inline constexpr double kSolveResidual = 1e-10;  // ||Ax-b|| <= this * (1+||b||)
inline constexpr double kPivotFloor = 1e-12;     // Cholesky pivot acceptance
inline constexpr double kLoewnerSlack = 1e-10;   // eigenvalue slack in ordering checks
inline constexpr double kBoundRel = 1e-9;        // relative slack on bound verdicts
}  // namespace tol

/// Dense symmetric positive-definite matrix. Symmetry is enforced
/// (exactly, entrywise) on construction; definiteness is checked only on
/// demand via is_spd() since the factorization costs O(d^3).
class SpdMatrix {
 public:
  // Symmetrizes the input as (m + m^T)/2. Rejects non-square or
  // non-finite input.
  explicit SpdMatrix(Matrix m);

  static SpdMatrix identity(Eigen::Index dim, double scale = 1.0);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Returns (P^{-1} + w x x^T)^{-1} without forming any inverse:
///   P - w (P x)(P x)^T / (1 + w x^T P x).
/// The result is symmetrized entrywise. w = 0 returns P unchanged.
SpdMatrix rank_one_downdate(const SpdMatrix& p, const Vector& x, double w);

/// x^T P x. Nonnegative for SPD P.
double quadratic_form(const SpdMatrix& p, const Vector& x);

/// Solves A x = b by Cholesky factorization and two triangular solves.
/// Throws NotSpdError if a pivot is <= 0.
Vector solve_spd(const SpdMatrix& a, const Vector& b);

/// True iff the Cholesky factorization succeeds with every pivot
/// above tol::kPivotFloor.
bool is_spd(const SpdMatrix& p);

/// Extreme eigenvalues of a symmetric matrix (ordering checks and
/// the assumption estimators).
double max_eigenvalue_sym(const Matrix& m);
double min_eigenvalue_sym(const Matrix& m);

}  // namespace sosekf

#endif  // SOSEKF_LINALG_HPP
