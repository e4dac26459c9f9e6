#include "qualbound/dists.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "qualbound/error.hpp"

namespace qualbound {
namespace {

constexpr int kMaxSeriesTerms = 10000;
constexpr double kSeriesRelTol = 1e-14;
// Truncation target for the non-central t series, relative to its sum.
constexpr double kNctTailTol = 1e-17;

bool is_nonpositive_integer(double b) {
  return b <= 0.0 && std::floor(b) == b;
}

void check_lower_params(double b1, double b2) {
  if (is_nonpositive_integer(b1) || is_nonpositive_integer(b2)) {
    fail(ErrorCode::InvalidParameter,
         "hyp2f2: lower parameters must not be non-positive integers");
  }
}

[[noreturn]] void no_convergence(double x) {
  std::ostringstream msg;
  msg << "hyp2f2: series did not converge within " << kMaxSeriesTerms
      << " terms (x = " << x << ")";
  fail(ErrorCode::NoConvergence, msg.str());
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Series part of P(T <= t) for t >= 0:
//   sum_j p_j I_y(j + 1/2, nu/2) + q_j I_y(j + 1, nu/2),
// p_j Poisson(lambda) weights, q_j = delta/sqrt(2) e^-lambda lambda^j /
// Gamma(j + 3/2), y = t^2 / (t^2 + nu).
double nct_series(double t, double delta, double nu) {
  const double y = t * t / (t * t + nu);
  if (y <= 0.0) return 0.0;
  const double one_minus_y = nu / (t * t + nu);
  const double b = nu / 2.0;
  const double lambda = delta * delta / 2.0;

  if (lambda == 0.0) {
    return boost::math::ibeta(0.5, b, y);
  }

  const auto mode = static_cast<std::int64_t>(std::floor(lambda));
  const double k = static_cast<double>(mode);
  const double log_pois = -lambda + k * std::log(lambda);
  const double p_mode = std::exp(log_pois - std::lgamma(k + 1.0));
  const double q_mode =
      delta / std::sqrt(2.0) * std::exp(log_pois - std::lgamma(k + 1.5));

  // I_y(a, b) and the recurrence step T(a) = y^a (1-y)^b / (a B(a, b)), so
  // that I_y(a + 1, b) = I_y(a, b) - T(a).
  auto start = [&](double a, double& ib, double& step) {
    ib = boost::math::ibeta(a, b, y);
    step = boost::math::ibeta_derivative(a, b, y) * y * one_minus_y / a;
  };
  double ip0, tp0, iq0, tq0;
  start(k + 0.5, ip0, tp0);
  start(k + 1.0, iq0, tq0);

  // Backward toward j = 0 first. For small y the incomplete betas grow
  // quickly as j falls, so these terms can dominate; summing all of them
  // costs at most `mode` steps.
  double sum = 0.0;
  {
    double p = p_mode, q = q_mode, ip = ip0, tp = tp0, iq = iq0, tq = tq0;
    for (std::int64_t j = mode; j > 0; --j) {
      const double jd = static_cast<double>(j);
      // Step a -> a - 1: T(a - 1) = T(a) * a / (y (a - 1 + b)).
      tp *= (jd + 0.5) / (y * (jd - 0.5 + b));
      ip += tp;
      tq *= (jd + 1.0) / (y * (jd + b));
      iq += tq;
      p *= jd / lambda;
      q *= (jd + 0.5) / lambda;
      sum += p * ip + q * iq;
    }
  }

  // Forward from the mode. Both weights shrink by at least lambda / (j + 1)
  // per step and the incomplete betas decrease, which bounds the tail.
  {
    double p = p_mode, q = q_mode, ip = ip0, tp = tp0, iq = iq0, tq = tq0;
    for (std::int64_t j = mode;; ++j) {
      const double jd = static_cast<double>(j);
      const double term = p * ip + q * iq;
      sum += term;
      const double ratio = lambda / (jd + 1.0);
      if (term == 0.0 || std::abs(term) * ratio / (1.0 - ratio) <=
                             kNctTailTol * std::abs(sum)) {
        break;
      }
      if (j - mode > kMaxSeriesTerms * 100) break;
      ip -= tp;
      tp *= y * (jd + 0.5 + b) / (jd + 1.5);
      iq -= tq;
      tq *= y * (jd + 1.0 + b) / (jd + 2.0);
      p *= lambda / (jd + 1.0);
      q *= lambda / (jd + 1.5);
    }
  }
  return sum;
}

double nct_cdf_nonneg(double t, double delta, double nu) {
  return normal_cdf(-delta) + 0.5 * nct_series(t, delta, nu);
}

}  // namespace

double hyp2f2(double a1, double a2, double b1, double b2, double x) {
  check_lower_params(b1, b2);
  double term = 1.0;
  double sum = 1.0;
  int small = 0;
  for (int k = 0; k < kMaxSeriesTerms; ++k) {
    const double kd = static_cast<double>(k);
    term *= (a1 + kd) * (a2 + kd) / ((b1 + kd) * (b2 + kd)) * x / (kd + 1.0);
    sum += term;
    if (term == 0.0) return sum;
    if (std::abs(term) <= kSeriesRelTol * std::abs(sum)) {
      if (++small == 3) return sum;
    } else {
      small = 0;
    }
  }
  no_convergence(x);
}

double hyp2f2_exp_scaled(double a1, double a2, double b1, double b2,
                         double x) {
  if (!(a1 > 0.0 && a2 > 0.0 && b1 > 0.0 && b2 > 0.0 && x >= 0.0)) {
    fail(ErrorCode::InvalidParameter,
         "hyp2f2_exp_scaled: parameters must be positive and x >= 0");
  }
  if (x == 0.0) return 1.0;
  const double log_x = std::log(x);
  double log_term = -x;
  double sum = std::exp(log_term);
  int small = 0;
  for (int k = 0; k < kMaxSeriesTerms; ++k) {
    const double kd = static_cast<double>(k);
    log_term += std::log(a1 + kd) + std::log(a2 + kd) - std::log(b1 + kd) -
                std::log(b2 + kd) + log_x - std::log(kd + 1.0);
    const double term = std::exp(log_term);
    sum += term;
    // Past the peak of the terms, keep going until they are negligible.
    if (term <= kSeriesRelTol * sum && kd > x) {
      if (++small == 3) return sum;
    } else {
      small = 0;
    }
  }
  no_convergence(x);
}

double nct_cdf(double x, double delta, double nu) {
  if (!(nu > 0.0)) {
    fail(ErrorCode::InvalidParameter, "nct_cdf: nu must be positive");
  }
  if (std::isnan(x) || std::isnan(delta)) return std::nan("");
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  const double value = x >= 0.0 ? nct_cdf_nonneg(x, delta, nu)
                                 : 1.0 - nct_cdf_nonneg(-x, -delta, nu);
  return std::clamp(value, 0.0, 1.0);
}

double nct_quantile(double u, double delta, double nu) {
  if (!(u > 0.0 && u < 1.0)) {
    fail(ErrorCode::InvalidParameter, "nct_quantile: u must lie in (0, 1)");
  }
  if (!(nu > 0.0)) {
    fail(ErrorCode::InvalidParameter, "nct_quantile: nu must be positive");
  }
  const double spread = std::max(1.0, std::sqrt(nu / (nu > 2.0 ? nu - 2.0 : 1.0)));
  double lo = delta - 20.0 * spread;
  double hi = delta + 20.0 * spread;
  auto f = [&](double t) { return nct_cdf(t, delta, nu) - u; };
  double flo = f(lo);
  double fhi = f(hi);
  for (int i = 0; flo > 0.0 && i < 200; ++i) {
    const double width = hi - lo;
    hi = lo;
    fhi = flo;
    lo -= 2.0 * width;
    flo = f(lo);
  }
  for (int i = 0; fhi < 0.0 && i < 200; ++i) {
    const double width = hi - lo;
    lo = hi;
    flo = fhi;
    hi += 2.0 * width;
    fhi = f(hi);
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo > 0.0 || fhi < 0.0) {
    fail(ErrorCode::NoConvergence, "nct_quantile: could not bracket root");
  }
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(50),
      max_iter);
  return 0.5 * (a + b);
}

double QualApproxParams::noncentrality() const {
  return std::sqrt(n_eff) * zeta;
}

void validate(const QualApproxParams& params) {
  if (!(params.n_eff > 0.0) || !std::isfinite(params.n_eff)) {
    fail(ErrorCode::InvalidParameter, "approximation: n_eff must be positive");
  }
  if (params.p_assets < 2) {
    fail(ErrorCode::DegenerateParams,
         "approximation requires at least 2 assets");
  }
  if (!(params.zeta > 0.0) || !std::isfinite(params.zeta)) {
    fail(ErrorCode::DegenerateParams,
         "approximation requires a positive maximal SNR");
  }
}

double qual_approx_cdf(double q, const QualApproxParams& params) {
  validate(params);
  if (q >= params.zeta) return 1.0;
  if (q <= -params.zeta) return 0.0;
  const double s = q / params.zeta;
  const double t = s / std::sqrt(1.0 - s * s) * std::sqrt(params.dof());
  return nct_cdf(t, params.noncentrality(), params.dof());
}

double qual_approx_quantile(double u, const QualApproxParams& params) {
  validate(params);
  const double t = nct_quantile(u, params.noncentrality(), params.dof());
  return params.zeta * std::sin(std::atan(t / std::sqrt(params.dof())));
}

double qual_approx_sample(const QualApproxParams& params, RngStream& rng) {
  validate(params);
  // T = (delta + z) / sqrt(chi2 / nu) and q = zeta sin(atan(T / sqrt(nu))),
  // which simplifies to zeta (delta + z) / sqrt((delta + z)^2 + chi2).
  const double num = params.noncentrality() + rng.normal();
  const double chi2 = rng.chi_squared(params.dof());
  return params.zeta * num / std::sqrt(num * num + chi2);
}

double ncbeta_sq_mean(const QualApproxParams& params) {
  if (params.zeta == 0.0 && params.p_assets >= 2 && params.n_eff > 0.0) {
    return 0.0;
  }
  validate(params);
  const double p = static_cast<double>(params.p_assets);
  const double zeta_sq = params.zeta * params.zeta;
  const double x = params.n_eff * zeta_sq / 2.0;
  const double log_gamma_ratio =
      boost::math::lgamma(1.5) - boost::math::lgamma(0.5) +
      boost::math::lgamma(p / 2.0) - boost::math::lgamma((p + 2.0) / 2.0);
  return zeta_sq * std::exp(log_gamma_ratio) *
         hyp2f2_exp_scaled(p / 2.0, 1.5, 0.5, (2.0 + p) / 2.0, x);
}

double ks_statistic(std::span<const double> sorted_samples,
                    const std::function<double(double)>& cdf) {
  if (sorted_samples.empty()) {
    fail(ErrorCode::InvalidParameter, "ks_statistic: no samples");
  }
  if (!std::is_sorted(sorted_samples.begin(), sorted_samples.end())) {
    fail(ErrorCode::InvalidParameter, "ks_statistic: samples must be sorted");
  }
  const double n = static_cast<double>(sorted_samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
    const double f = cdf(sorted_samples[i]);
    const double above = static_cast<double>(i + 1) / n - f;
    const double below = f - static_cast<double>(i) / n;
    d = std::max({d, above, below});
  }
  return d;
}

}  // namespace qualbound
