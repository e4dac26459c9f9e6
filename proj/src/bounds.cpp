#include "qualbound/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "qualbound/error.hpp"
#include "qualbound/quality.hpp"

namespace qualbound {

void validate(const BoundInputs& inputs) {
  if (!(inputs.n_eff > 0.0) || !std::isfinite(inputs.n_eff)) {
    fail(ErrorCode::InvalidParameter, "bound: n_eff must be positive");
  }
  if (inputs.dof < 1) {
    fail(ErrorCode::InvalidParameter, "bound: dof must be at least 1");
  }
  if (!(inputs.effect >= 0.0) || !std::isfinite(inputs.effect)) {
    fail(ErrorCode::InvalidParameter, "bound: effect must be non-negative");
  }
}

double qual_bound(const BoundInputs& in) {
  validate(in);
  if (in.effect == 0.0) return 0.0;
  const double effect_size = in.n_eff * in.effect;
  return std::sqrt(in.n_eff) * in.effect /
         std::sqrt(static_cast<double>(in.dof - 1) + effect_size);
}

double qual_bound_conditional(double n_eff, int p, int f, double zeta) {
  if (p < 1 || f < 1) {
    fail(ErrorCode::InvalidParameter, "bound: p and f must be positive");
  }
  return qual_bound({n_eff, f * p, zeta * zeta});
}

double qual_bound_subspace(double n_eff, int p0, int f, double zeta_j_sq) {
  if (p0 < 1 || f < 1) {
    fail(ErrorCode::InvalidParameter, "bound: p0 and f must be positive");
  }
  return qual_bound({n_eff, f * p0, zeta_j_sq});
}

double qual_bound_hedged(double n_eff, int p, int k, int f,
                         double delta_zeta_sq) {
  if (k < 0 || k >= p || f < 1) {
    fail(ErrorCode::InvalidParameter,
         "bound: hedging needs 0 <= k < p and f >= 1");
  }
  return qual_bound({n_eff, f * (p - k), delta_zeta_sq});
}

double subspace_snr(const MarketModel& model, const Matrix& j) {
  const Matrix proj = risk_projection(model.sigma(), j);
  const Matrix& b = model.coeffs();
  return std::max(0.0,
                  (b.transpose() * proj * b * model.feature_moment()).trace());
}

double hedged_snr_gap(const MarketModel& model, const Matrix& g) {
  const double total = std::pow(max_snr(model), 2);
  return std::max(0.0, total - subspace_snr(model, g));
}

double approx_median(const BoundInputs& inputs) { return qual_bound(inputs); }

double expected_sq_quality(const QualApproxParams& params) {
  return ncbeta_sq_mean(params);
}

double capm_snr(std::span<const double> alpha, std::span<const double> beta,
                double sigma, double sigma_m) {
  if (alpha.size() != beta.size() || alpha.empty()) {
    fail(ErrorCode::InvalidParameter,
         "capm_snr: alpha and beta must be non-empty and equal length");
  }
  if (!(sigma > 0.0) || !(sigma_m >= 0.0)) {
    fail(ErrorCode::InvalidParameter,
         "capm_snr: need sigma > 0 and sigma_m >= 0");
  }
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    aa += alpha[i] * alpha[i];
    bb += beta[i] * beta[i];
    ab += alpha[i] * beta[i];
  }
  const double ratio_sq = (sigma_m / sigma) * (sigma_m / sigma);
  return (aa + ratio_sq * (bb * aa - ab * ab)) /
         (sigma * sigma + sigma_m * sigma_m * bb);
}

bool growth_condition(double n_eff, double p, double zeta, double dzeta_dp) {
  if (!(zeta > 0.0)) {
    fail(ErrorCode::InvalidParameter, "growth_condition: zeta must be > 0");
  }
  return dzeta_dp >= zeta / (2.0 * n_eff * zeta * zeta + 4.0 * (p - 1.0));
}

std::vector<ScalingPoint> scaling_curve(double gamma, double anchor_p,
                                        double anchor_zeta, double n_eff,
                                        std::span<const double> p_values) {
  if (p_values.empty()) {
    fail(ErrorCode::InvalidParameter, "scaling_curve: empty p range");
  }
  if (!(anchor_p > 0.0) || !(anchor_zeta > 0.0)) {
    fail(ErrorCode::InvalidParameter, "scaling_curve: anchor must be positive");
  }
  std::vector<ScalingPoint> out;
  out.reserve(p_values.size());
  for (const double p : p_values) {
    if (!(p >= 1.0)) {
      fail(ErrorCode::InvalidParameter, "scaling_curve: p must be >= 1");
    }
    const double zeta =
        p == anchor_p ? anchor_zeta : anchor_zeta * std::pow(p / anchor_p, gamma);
    // Fractional p is allowed here; dof - 1 enters as p - 1.
    const double effect = n_eff * zeta * zeta;
    out.push_back({p, zeta, std::sqrt(n_eff) * zeta * zeta /
                                std::sqrt(p - 1.0 + effect)});
  }
  return out;
}

}  // namespace qualbound
