#pragma once

#include <optional>

#include "qualbound/linalg.hpp"

namespace qualbound {

/// Population parameters of the returns process.
///
/// The conditional model E[r | f] = B f, Var[r | f] = Sigma, E[f f^T] = Sigma_f
/// contains the unconditional model as the case f = 1, B = mu, Sigma_f = [1].
/// Sigma is factored once at construction, which also validates it.
class MarketModel {
 public:
  static MarketModel unconditional(Vector mu, Matrix sigma);
  static MarketModel conditional(Matrix coeffs, Matrix sigma,
                                 Matrix feature_moment);

  Eigen::Index assets() const noexcept { return coeffs_.rows(); }
  Eigen::Index features() const noexcept { return coeffs_.cols(); }
  bool is_unconditional() const noexcept { return coeffs_.cols() == 1; }

  /// Expected returns. Only meaningful when is_unconditional().
  Vector mu() const { return coeffs_.col(0); }
  const Matrix& coeffs() const noexcept { return coeffs_; }
  const Matrix& sigma() const noexcept { return sigma_; }
  const Matrix& sigma_chol() const noexcept { return sigma_chol_; }
  const Matrix& feature_moment() const noexcept { return feature_moment_; }

 private:
  MarketModel(Matrix coeffs, Matrix sigma, Matrix feature_moment);

  Matrix coeffs_;
  Matrix sigma_;
  Matrix sigma_chol_;
  Matrix feature_moment_;
};

/// n x p per-period returns, optionally with an n x f feature matrix whose
/// first column is the constant 1.
struct ReturnsSample {
  Matrix returns;
  std::optional<Matrix> features;

  Eigen::Index periods() const noexcept { return returns.rows(); }
  Eigen::Index assets() const noexcept { return returns.cols(); }
};

}  // namespace qualbound
