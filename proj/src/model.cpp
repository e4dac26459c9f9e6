#include "qualbound/model.hpp"

#include "qualbound/error.hpp"

namespace qualbound {

MarketModel::MarketModel(Matrix coeffs, Matrix sigma, Matrix feature_moment)
    : coeffs_(std::move(coeffs)),
      sigma_(std::move(sigma)),
      feature_moment_(std::move(feature_moment)) {
  if (sigma_.rows() != coeffs_.rows()) {
    fail(ErrorCode::InvalidParameter,
         "MarketModel: Sigma and coefficients disagree on asset count");
  }
  if (feature_moment_.rows() != coeffs_.cols()) {
    fail(ErrorCode::InvalidParameter,
         "MarketModel: Sigma_f and coefficients disagree on feature count");
  }
  sigma_chol_ = cholesky_lower(sigma_);
  if (coeffs_.cols() > 1) cholesky_lower(feature_moment_);
}

MarketModel MarketModel::unconditional(Vector mu, Matrix sigma) {
  Matrix coeffs = std::move(mu);
  return MarketModel(std::move(coeffs), std::move(sigma), Matrix::Ones(1, 1));
}

MarketModel MarketModel::conditional(Matrix coeffs, Matrix sigma,
                                     Matrix feature_moment) {
  return MarketModel(std::move(coeffs), std::move(sigma),
                     std::move(feature_moment));
}

}  // namespace qualbound
