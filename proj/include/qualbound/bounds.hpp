#pragma once

#include <span>
#include <vector>

#include "qualbound/dists.hpp"
#include "qualbound/model.hpp"

namespace qualbound {

/// Inputs of the expected-quality upper bound.
///
/// `n_eff` counts observations in the time unit of `effect` (a squared SNR
/// or SNR gap), so n_eff * effect is the unitless effect size. `dof` is the
/// estimator's degrees of freedom: p, f p, f p0 or f (p - k).
struct BoundInputs {
  double n_eff = 1.0;
  int dof = 1;
  double effect = 0.0;
};

void validate(const BoundInputs& inputs);

/// sqrt(n) effect / sqrt(dof - 1 + n effect): an upper bound on the expected
/// quality of a directionally equivariant estimator under Gaussian returns.
double qual_bound(const BoundInputs& inputs);

/// Feature-linear strategies with f features (one a constant): dof = f p.
double qual_bound_conditional(double n_eff, int p, int f, double zeta);

/// Portfolios confined to a p0-dimensional subspace: dof = f p0 with the
/// subspace SNR zeta_J^2 as the effect.
double qual_bound_subspace(double n_eff, int p0, int f, double zeta_j_sq);

/// Hedged portfolios: dof = f (p - k), effect = the SNR gap delta_zeta_sq.
double qual_bound_hedged(double n_eff, int p, int k, int f,
                         double delta_zeta_sq);

/// zeta_J^2 = tr(B' J'(J Sigma J')^-1 J B Sigma_f) for J of full row rank.
double subspace_snr(const MarketModel& model, const Matrix& j);

/// Squared SNR lost by hedging out the rows of G:
/// tr(B' Sigma^-1 B Sigma_f) - tr(B' G'(G Sigma G')^-1 G B Sigma_f).
double hedged_snr_gap(const MarketModel& model, const Matrix& g);

/// Approximate median of the Markowitz portfolio's quality, taking the
/// non-central t median to be its non-centrality. Numerically identical to
/// qual_bound.
double approx_median(const BoundInputs& inputs);

/// E[q^2] under the quality approximation.
double expected_sq_quality(const QualApproxParams& params);

/// Squared maximal SNR under a single-factor model with asset alphas, betas,
/// idiosyncratic volatility sigma and market volatility sigma_m.
double capm_snr(std::span<const double> alpha, std::span<const double> beta,
                double sigma, double sigma_m);

/// True iff d zeta / d p >= zeta / (2 n zeta^2 + 4 (p - 1)), i.e. the bound
/// is locally nondecreasing in the number of assets.
bool growth_condition(double n_eff, double p, double zeta, double dzeta_dp);

struct ScalingPoint {
  double p;
  double zeta;
  double bound;
};

/// zeta(p) = anchor_zeta (p / anchor_p)^gamma with the bound at each p.
std::vector<ScalingPoint> scaling_curve(double gamma, double anchor_p,
                                        double anchor_zeta, double n_eff,
                                        std::span<const double> p_values);

}  // namespace qualbound
