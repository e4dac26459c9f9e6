#pragma once

#include <string_view>

#include "qualbound/model.hpp"

namespace qualbound {

/// Population quality w'mu / sqrt(w' Sigma w) of an unconditional model.
double qual(const Vector& w, const MarketModel& model);

/// Maximal achievable quality: sqrt(mu' Sigma^-1 mu), or in the conditional
/// model sqrt(tr(B' Sigma^-1 B Sigma_f)).
double max_snr(const MarketModel& model);

/// qual / max_snr: the cosine between Sigma^{1/2} w and Sigma^{-1/2} mu.
/// Throws DegenerateModel when max_snr is zero.
double cos_angle(const Vector& w, const MarketModel& model);

/// Sample Markowitz portfolio Sigma_hat^-1 mu_hat, with the n-1 denominator
/// covariance. Throws SingularCovariance when Sigma_hat is not invertible.
Vector markowitz(const ReturnsSample& sample);

/// W = Sigma_hat^-1 B_hat with B_hat = R'F (F'F)^-1 and Sigma_hat the
/// residual covariance over n - f degrees of freedom.
Matrix conditional_markowitz(const ReturnsSample& sample);

/// tr(W' B Sigma_f) / sqrt(tr(W' Sigma W Sigma_f)).
double conditional_qual(const Matrix& w, const MarketModel& model);

/// G' (G Sigma G')^-1 G for a k x p matrix G of full row rank.
Matrix risk_projection(const Matrix& sigma, const Matrix& g);

/// w - P Sigma w with P = risk_projection(Sigma, G); the result has zero
/// covariance with every row of G.
Vector hedge_transform(const Vector& w, const Matrix& sigma, const Matrix& g);
Matrix hedge_transform(const Matrix& w, const Matrix& sigma, const Matrix& g);

enum class SnrMethod { unbiased, truncated };

std::string_view to_string(SnrMethod method) noexcept;
SnrMethod parse_snr_method(std::string_view name);

/// Estimate of the squared maximal SNR from a sample:
/// (1 - p/n) z^2 - p/n with z^2 = mu_hat' Sigma_hat^-1 mu_hat; `truncated`
/// clips the estimate at zero.
double snr_estimate(const ReturnsSample& sample, SnrMethod method);

/// Same estimate from the sample Hotelling statistic z^2.
double snr_estimate_from_stat(double z_sq, double n, double p,
                              SnrMethod method);

}  // namespace qualbound
