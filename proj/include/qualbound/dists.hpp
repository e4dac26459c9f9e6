#pragma once

#include <functional>
#include <span>

#include "qualbound/rng.hpp"

namespace qualbound {

/// Generalized hypergeometric 2F2(a1, a2; b1, b2; x) by direct series.
///
/// Summation stops once three consecutive terms are below 1e-14 of the
/// partial sum. Throws NoConvergence past 10,000 terms and InvalidParameter
/// when a lower parameter is a non-positive integer.
double hyp2f2(double a1, double a2, double b1, double b2, double x);

/// exp(-x) * 2F2(a1, a2; b1, b2; x), summed in the log domain so that large
/// x does not overflow. Requires all parameters positive and x >= 0.
double hyp2f2_exp_scaled(double a1, double a2, double b1, double b2, double x);

/// P(T <= x) for T non-central t with `nu` degrees of freedom and
/// non-centrality `delta`.
///
/// Poisson-weighted series of regularized incomplete beta functions, summed
/// outward from the Poisson mode with recurrences in the first shape
/// parameter. Negative x uses P(T <= x; delta) = 1 - P(T <= -x; -delta).
double nct_cdf(double x, double delta, double nu);

/// Inverse of nct_cdf in x, by bracketing and a bracketed root solve.
double nct_quantile(double u, double delta, double nu);

/// Parameters of the approximate law of the Markowitz portfolio's quality:
/// tan(arcsin(q / zeta)) ~ t'(sqrt(n) zeta, p - 1) / sqrt(p - 1).
///
/// `n_eff` and `zeta` must use the same time unit (e.g. years and
/// annualized SNR) so that n * zeta^2 is unitless.
struct QualApproxParams {
  double n_eff = 1.0;
  int p_assets = 2;
  double zeta = 0.0;

  double noncentrality() const;
  double dof() const { return static_cast<double>(p_assets - 1); }
};

/// Throws DegenerateParams for zeta <= 0 or p < 2, InvalidParameter for
/// n_eff <= 0.
void validate(const QualApproxParams& params);

double qual_approx_cdf(double q, const QualApproxParams& params);
double qual_approx_quantile(double u, const QualApproxParams& params);
double qual_approx_sample(const QualApproxParams& params, RngStream& rng);

/// E[q^2] under the approximation, through the non-central Beta mean
/// expressed with 2F2(p/2, 3/2; 1/2, (p+2)/2; n zeta^2 / 2).
double ncbeta_sq_mean(const QualApproxParams& params);

/// Kolmogorov-Smirnov distance between the empirical CDF of sorted samples
/// and `cdf`.
double ks_statistic(std::span<const double> sorted_samples,
                    const std::function<double(double)>& cdf);

}  // namespace qualbound
