#include "qualbound/quality.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "qualbound/error.hpp"

namespace qualbound {
namespace {

void require_unconditional(const MarketModel& model, const char* what) {
  if (!model.is_unconditional()) {
    fail(ErrorCode::InvalidParameter,
         std::string(what) + ": needs an unconditional model");
  }
}

// Cholesky of an estimated covariance, reporting failure as singularity.
Matrix estimated_chol(const Matrix& cov, const char* what) {
  try {
    return cholesky_lower(cov);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    fail(ErrorCode::SingularCovariance,
         std::string(what) + ": sample covariance is singular");
  }
}

Matrix projection_chol(const Matrix& sigma, const Matrix& g) {
  if (g.cols() != sigma.rows() || g.rows() == 0 || g.rows() > g.cols()) {
    fail(ErrorCode::InvalidParameter,
         "risk_projection: G must be k x p with 1 <= k <= p");
  }
  const Matrix inner = g * sigma * g.transpose();
  try {
    return cholesky_lower(0.5 * (inner + inner.transpose()));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    fail(ErrorCode::RankDeficient, "risk_projection: G is rank deficient");
  }
}

}  // namespace

double qual(const Vector& w, const MarketModel& model) {
  require_unconditional(model, "qual");
  if (w.size() != model.assets()) {
    fail(ErrorCode::InvalidParameter, "qual: portfolio dimension mismatch");
  }
  const double risk_sq = w.dot(model.sigma() * w);
  if (!(risk_sq > 0.0)) fail(ErrorCode::ZeroPortfolio, "qual: zero portfolio");
  return w.dot(model.mu()) / std::sqrt(risk_sq);
}

double max_snr(const MarketModel& model) {
  // ||L^-1 B Sigma_f^{1/2}||_F^2 = tr(B' Sigma^-1 B Sigma_f).
  const Matrix white =
      model.sigma_chol().triangularView<Eigen::Lower>().solve(model.coeffs());
  const double sq = (white.transpose() * white * model.feature_moment()).trace();
  return std::sqrt(std::max(sq, 0.0));
}

double cos_angle(const Vector& w, const MarketModel& model) {
  const double zeta = max_snr(model);
  if (!(zeta > 0.0)) {
    fail(ErrorCode::DegenerateModel, "cos_angle: maximal SNR is zero");
  }
  return std::clamp(qual(w, model) / zeta, -1.0, 1.0);
}

Vector markowitz(const ReturnsSample& sample) {
  const Eigen::Index n = sample.periods();
  if (n < 2) {
    fail(ErrorCode::InvalidParameter, "markowitz: need at least 2 periods");
  }
  const SampleMoments m = sample_moments(sample.returns);
  return solve_with_cholesky(estimated_chol(m.covariance, "markowitz"), m.mean);
}

Matrix conditional_markowitz(const ReturnsSample& sample) {
  if (!sample.features) {
    fail(ErrorCode::InvalidParameter, "conditional_markowitz: no features");
  }
  const Matrix& f = *sample.features;
  const Matrix& r = sample.returns;
  const Eigen::Index n = r.rows();
  const Eigen::Index nf = f.cols();
  if (f.rows() != n) {
    fail(ErrorCode::InvalidParameter,
         "conditional_markowitz: features and returns row counts differ");
  }
  if (n <= nf) {
    fail(ErrorCode::SingularCovariance,
         "conditional_markowitz: need more periods than features");
  }
  Matrix ftf = f.transpose() * f;
  Matrix ftf_chol;
  try {
    ftf_chol = cholesky_lower(0.5 * (ftf + ftf.transpose()));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    fail(ErrorCode::SingularFeatures,
         "conditional_markowitz: F'F is singular");
  }
  // B_hat' = (F'F)^-1 F'R
  const Matrix coeffs_t = solve_with_cholesky(ftf_chol, Matrix(f.transpose() * r));
  const Matrix resid = r - f * coeffs_t;
  Matrix cov = resid.transpose() * resid / static_cast<double>(n - nf);
  cov = 0.5 * (cov + cov.transpose());
  // Residuals at round-off level of the returns mean an exact fit.
  if (cov.trace() <= 1e-20 * r.squaredNorm() / static_cast<double>(n)) {
    fail(ErrorCode::SingularCovariance,
         "conditional_markowitz: residual covariance is singular");
  }
  return solve_with_cholesky(estimated_chol(cov, "conditional_markowitz"),
                             Matrix(coeffs_t.transpose()));
}

double conditional_qual(const Matrix& w, const MarketModel& model) {
  if (w.rows() != model.assets() || w.cols() != model.features()) {
    fail(ErrorCode::InvalidParameter,
         "conditional_qual: W must be p x f matching the model");
  }
  const Matrix& sf = model.feature_moment();
  const double risk_sq = (w.transpose() * model.sigma() * w * sf).trace();
  if (!(risk_sq > 0.0)) {
    fail(ErrorCode::ZeroPortfolio, "conditional_qual: zero portfolio");
  }
  return (w.transpose() * model.coeffs() * sf).trace() / std::sqrt(risk_sq);
}

Matrix risk_projection(const Matrix& sigma, const Matrix& g) {
  const Matrix chol = projection_chol(sigma, g);
  return g.transpose() * solve_with_cholesky(chol, g);
}

Matrix hedge_transform(const Matrix& w, const Matrix& sigma, const Matrix& g) {
  if (w.rows() != sigma.rows()) {
    fail(ErrorCode::InvalidParameter, "hedge_transform: dimension mismatch");
  }
  const Matrix chol = projection_chol(sigma, g);
  const Matrix g_sigma_w = g * (sigma * w);
  return w - g.transpose() * solve_with_cholesky(chol, g_sigma_w);
}

Vector hedge_transform(const Vector& w, const Matrix& sigma, const Matrix& g) {
  return hedge_transform(Matrix(w), sigma, g).col(0);
}

std::string_view to_string(SnrMethod method) noexcept {
  return method == SnrMethod::unbiased ? "unbiased" : "truncated";
}

SnrMethod parse_snr_method(std::string_view name) {
  if (name == "unbiased") return SnrMethod::unbiased;
  if (name == "truncated") return SnrMethod::truncated;
  fail(ErrorCode::InvalidParameter,
       "unknown SNR method '" + std::string(name) +
           "' (expected unbiased or truncated)");
}

double snr_estimate_from_stat(double z_sq, double n, double p,
                              SnrMethod method) {
  const double ratio = p / n;
  const double est = (1.0 - ratio) * z_sq - ratio;
  return method == SnrMethod::truncated ? std::max(0.0, est) : est;
}

double snr_estimate(const ReturnsSample& sample, SnrMethod method) {
  const Eigen::Index n = sample.periods();
  const Eigen::Index p = sample.assets();
  if (n <= p) {
    std::ostringstream msg;
    msg << "snr_estimate: need more periods (" << n << ") than assets (" << p
        << ")";
    fail(ErrorCode::SingularCovariance, msg.str());
  }
  const SampleMoments m = sample_moments(sample.returns);
  const Matrix chol = estimated_chol(m.covariance, "snr_estimate");
  const Vector white = chol.triangularView<Eigen::Lower>().solve(m.mean);
  return snr_estimate_from_stat(white.squaredNorm(), static_cast<double>(n),
                                static_cast<double>(p), method);
}

}  // namespace qualbound
