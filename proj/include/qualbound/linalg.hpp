#pragma once

#include <Eigen/Dense>

namespace qualbound {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative tolerance used when checking that an input matrix is symmetric.
inline constexpr double kSymmetryTolerance = 1e-12;

/// Throws InvalidParameter unless `s` is square and symmetric to
/// kSymmetryTolerance relative to its largest entry.
void require_symmetric(const Matrix& s, const char* what);

/// Lower Cholesky factor L with L * L^T = s.
///
/// A pivot at or below 1e-12 * trace(s) / dim raises NotPositiveDefinite.
/// Only the lower triangle of `s` is read once symmetry has been checked.
Matrix cholesky_lower(const Matrix& s);

/// Solves s * x = b for positive-definite s. `b` may have several columns.
Matrix solve_psd(const Matrix& s, const Matrix& b);
Vector solve_psd(const Matrix& s, const Vector& b);

/// Solves (L L^T) x = b given a lower Cholesky factor.
Matrix solve_with_cholesky(const Matrix& chol, const Matrix& b);
Vector solve_with_cholesky(const Matrix& chol, const Vector& b);

/// Unbiased (n-1 denominator) sample covariance of the rows of `x`, together
/// with the column means.
struct SampleMoments {
  Vector mean;
  Matrix covariance;
};
SampleMoments sample_moments(const Matrix& x);

}  // namespace qualbound
