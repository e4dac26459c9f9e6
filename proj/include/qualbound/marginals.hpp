#pragma once

#include <span>
#include <string>
#include <variant>

#include "qualbound/model.hpp"
#include "qualbound/rng.hpp"

namespace qualbound {

struct Gaussian {};
struct Uniform {};
struct StudentT {
  double df = 4.0;  // must exceed 2
};
struct TukeyH {
  double h = 0.15;  // in [0, 0.5)
};
struct LambertW {
  double gamma = -0.2;  // skewness parameter of Z * exp(gamma * Z)
};

/// Family of a univariate return marginal. Draws are affinely standardized to
/// mean 0 and variance 1 using the closed-form moments of each family.
using MarginalKind = std::variant<Gaussian, Uniform, StudentT, TukeyH, LambertW>;

void validate(const MarginalKind& kind);
std::string describe(const MarginalKind& kind);

/// Precomputed standardizing constants for one marginal family.
class StandardDraw {
 public:
  explicit StandardDraw(const MarginalKind& kind);

  double operator()(RngStream& rng) const;
  void fill(RngStream& rng, std::span<double> out) const;

  /// Mean and variance of the unstandardized draw.
  double raw_mean() const noexcept { return raw_mean_; }
  double raw_variance() const noexcept { return raw_sd_ * raw_sd_; }

 private:
  enum class Family { gaussian, uniform, student_t, tukey_h, lambert_w };

  double raw(RngStream& rng) const;

  Family family_;
  double param_ = 0.0;
  double raw_mean_ = 0.0;
  double raw_sd_ = 1.0;
};

double standard_draw(const MarginalKind& kind, RngStream& rng);

enum class SigmaMode { identity, wishart };
enum class MuDirection { first_axis, uniform_sphere, given };

struct GeneratorConfig {
  int n_obs = 2;
  int p_assets = 1;
  double target_snr = 0.0;  // per period
  MarginalKind marginal = Gaussian{};
  SigmaMode sigma_mode = SigmaMode::identity;
  double wishart_df = 0.0;  // 0 selects 2 * p_assets
  MuDirection mu_direction = MuDirection::first_axis;
  Matrix direction;         // p x f, used with MuDirection::given
  int n_features = 1;       // f; f > 1 builds a conditional model
};

void validate(const GeneratorConfig& config);

/// Population covariance per the configured mode: identity, or a Wishart draw
/// rescaled to trace p.
Matrix draw_sigma(const GeneratorConfig& config, RngStream& rng);

/// Market with the requested covariance and maximal SNR exactly target_snr.
///
/// Unconditional: mu = zeta * Sigma d / sqrt(d' Sigma d). With f features the
/// coefficients are B = zeta * Sigma D / sqrt(tr(D' Sigma D)) and Sigma_f = I,
/// matching features that are a constant 1 followed by independent N(0, 1).
MarketModel build_market(const GeneratorConfig& config, RngStream& rng);
MarketModel build_market(const GeneratorConfig& config, Matrix sigma,
                         RngStream& rng);

/// n_obs rows of mu + L z (or B f + L z for a conditional model), where z has
/// i.i.d. standardized marginals of the given kind.
ReturnsSample sample_returns(const MarketModel& model, int n_obs,
                             const MarginalKind& marginal, RngStream& rng);

}  // namespace qualbound
