#include "qualbound/linalg.hpp"

#include <cmath>
#include <sstream>

#include "qualbound/error.hpp"

namespace qualbound {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DegenerateWishart: return "DegenerateWishart";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegenerateParams: return "DegenerateParams";
    case ErrorCode::DegenerateModel: return "DegenerateModel";
    case ErrorCode::ZeroPortfolio: return "ZeroPortfolio";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::SingularFeatures: return "SingularFeatures";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TooManyFailures: return "TooManyFailures";
  }
  return "Unknown";
}

void require_symmetric(const Matrix& s, const char* what) {
  if (s.rows() != s.cols() || s.rows() == 0) {
    std::ostringstream msg;
    msg << what << ": expected a non-empty square matrix, got " << s.rows()
        << "x" << s.cols();
    fail(ErrorCode::InvalidParameter, msg.str());
  }
  const double scale = s.cwiseAbs().maxCoeff();
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= kSymmetryTolerance * scale)) {
    std::ostringstream msg;
    msg << what << ": matrix is not symmetric (max asymmetry " << asym << ")";
    fail(ErrorCode::InvalidParameter, msg.str());
  }
}

Matrix cholesky_lower(const Matrix& s) {
  require_symmetric(s, "cholesky_lower");
  const Eigen::Index dim = s.rows();
  const double tol = 1e-12 * s.trace() / static_cast<double>(dim);

  // Left-looking Cholesky-Banachiewicz on the lower triangle.
  Matrix chol = Matrix::Zero(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    double pivot = s(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= chol(j, k) * chol(j, k);
    if (!(pivot > tol) || !(pivot > 0.0)) {
      std::ostringstream msg;
      msg << "cholesky_lower: pivot " << pivot << " at index " << j
          << " is not above tolerance " << tol;
      fail(ErrorCode::NotPositiveDefinite, msg.str());
    }
    const double diag = std::sqrt(pivot);
    chol(j, j) = diag;
    for (Eigen::Index i = j + 1; i < dim; ++i) {
      double acc = s(i, j);
      for (Eigen::Index k = 0; k < j; ++k) acc -= chol(i, k) * chol(j, k);
      chol(i, j) = acc / diag;
    }
  }
  return chol;
}

Matrix solve_with_cholesky(const Matrix& chol, const Matrix& b) {
  if (chol.rows() != b.rows()) {
    fail(ErrorCode::InvalidParameter, "solve: dimension mismatch");
  }
  const auto lower = chol.triangularView<Eigen::Lower>();
  Matrix y = lower.solve(b);
  return lower.transpose().solve(y);
}

Vector solve_with_cholesky(const Matrix& chol, const Vector& b) {
  if (chol.rows() != b.size()) {
    fail(ErrorCode::InvalidParameter, "solve: dimension mismatch");
  }
  const auto lower = chol.triangularView<Eigen::Lower>();
  Vector y = lower.solve(b);
  return lower.transpose().solve(y);
}

Matrix solve_psd(const Matrix& s, const Matrix& b) {
  return solve_with_cholesky(cholesky_lower(s), b);
}

Vector solve_psd(const Matrix& s, const Vector& b) {
  return solve_with_cholesky(cholesky_lower(s), b);
}

SampleMoments sample_moments(const Matrix& x) {
  const Eigen::Index n = x.rows();
  if (n < 2) {
    fail(ErrorCode::InvalidParameter, "sample_moments: need at least 2 rows");
  }
  SampleMoments out;
  out.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - out.mean.transpose();
  out.covariance = Matrix(x.cols(), x.cols());
  out.covariance.setZero();
  out.covariance.selfadjointView<Eigen::Lower>().rankUpdate(
      centered.transpose(), 1.0 / static_cast<double>(n - 1));
  out.covariance = out.covariance.selfadjointView<Eigen::Lower>();
  return out;
}

}  // namespace qualbound
