#include "qualbound/marginals.hpp"

#include <cmath>
#include <sstream>

#include "qualbound/error.hpp"

namespace qualbound {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void validate(const MarginalKind& kind) {
  std::visit(
      overloaded{
          [](const Gaussian&) {},
          [](const Uniform&) {},
          [](const StudentT& t) {
            if (!(t.df > 2.0)) {
              fail(ErrorCode::InvalidParameter,
                   "student_t marginal needs df > 2 for finite variance");
            }
          },
          [](const TukeyH& t) {
            if (!(t.h >= 0.0 && t.h < 0.5)) {
              fail(ErrorCode::InvalidParameter,
                   "tukey_h marginal needs h in [0, 0.5)");
            }
          },
          [](const LambertW& w) {
            if (!std::isfinite(w.gamma)) {
              fail(ErrorCode::InvalidParameter,
                   "lambert_w marginal needs a finite gamma");
            }
          },
      },
      kind);
}

std::string describe(const MarginalKind& kind) {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const Gaussian&) { out << "gaussian"; },
                 [&](const Uniform&) { out << "uniform"; },
                 [&](const StudentT& t) { out << "t(" << t.df << ")"; },
                 [&](const TukeyH& t) { out << "tukey_h(" << t.h << ")"; },
                 [&](const LambertW& w) {
                   out << "lambert_w(" << w.gamma << ")";
                 },
             },
             kind);
  return out.str();
}

StandardDraw::StandardDraw(const MarginalKind& kind) {
  validate(kind);
  std::visit(
      overloaded{
          [&](const Gaussian&) { family_ = Family::gaussian; },
          [&](const Uniform&) {
            // U(0,1) has variance 1/12; the affine map lands on U(-sqrt3, sqrt3).
            family_ = Family::uniform;
            raw_mean_ = 0.5;
            raw_sd_ = std::sqrt(1.0 / 12.0);
          },
          [&](const StudentT& t) {
            family_ = Family::student_t;
            param_ = t.df;
            raw_sd_ = std::sqrt(t.df / (t.df - 2.0));
          },
          [&](const TukeyH& t) {
            family_ = Family::tukey_h;
            param_ = t.h;
            raw_sd_ = std::pow(1.0 - 2.0 * t.h, -0.75);
          },
          [&](const LambertW& w) {
            family_ = Family::lambert_w;
            const double g2 = w.gamma * w.gamma;
            param_ = w.gamma;
            raw_mean_ = w.gamma * std::exp(g2 / 2.0);
            const double second = (1.0 + 4.0 * g2) * std::exp(2.0 * g2);
            raw_sd_ = std::sqrt(second - raw_mean_ * raw_mean_);
          },
      },
      kind);
}

double StandardDraw::raw(RngStream& rng) const {
  switch (family_) {
    case Family::gaussian:
      return rng.normal();
    case Family::uniform:
      return rng.uniform();
    case Family::student_t: {
      const double z = rng.normal();
      return z / std::sqrt(rng.chi_squared(param_) / param_);
    }
    case Family::tukey_h: {
      const double z = rng.normal();
      return z * std::exp(0.5 * param_ * z * z);
    }
    case Family::lambert_w: {
      const double z = rng.normal();
      return z * std::exp(param_ * z);
    }
  }
  return 0.0;
}

double StandardDraw::operator()(RngStream& rng) const {
  if (family_ == Family::gaussian) return rng.normal();
  return (raw(rng) - raw_mean_) / raw_sd_;
}

void StandardDraw::fill(RngStream& rng, std::span<double> out) const {
  if (family_ == Family::gaussian) {
    for (double& x : out) x = rng.normal();
    return;
  }
  const double inv_sd = 1.0 / raw_sd_;
  for (double& x : out) x = (raw(rng) - raw_mean_) * inv_sd;
}

double standard_draw(const MarginalKind& kind, RngStream& rng) {
  return StandardDraw(kind)(rng);
}

void validate(const GeneratorConfig& config) {
  if (config.n_obs < 2) {
    fail(ErrorCode::InvalidParameter, "generator: n_obs must be at least 2");
  }
  if (config.p_assets < 1) {
    fail(ErrorCode::InvalidParameter, "generator: p_assets must be positive");
  }
  if (!(config.target_snr >= 0.0) || !std::isfinite(config.target_snr)) {
    fail(ErrorCode::InvalidParameter,
         "generator: target_snr must be finite and non-negative");
  }
  if (config.n_features < 1) {
    fail(ErrorCode::InvalidParameter, "generator: n_features must be >= 1");
  }
  if (config.sigma_mode == SigmaMode::wishart && config.wishart_df != 0.0 &&
      !(config.wishart_df >= config.p_assets)) {
    fail(ErrorCode::DegenerateWishart,
         "generator: wishart_df must be at least p_assets");
  }
  if (config.mu_direction == MuDirection::given &&
      (config.direction.rows() != config.p_assets ||
       config.direction.cols() != config.n_features)) {
    fail(ErrorCode::InvalidParameter,
         "generator: given direction must be p_assets x n_features");
  }
  validate(config.marginal);
}

Matrix draw_sigma(const GeneratorConfig& config, RngStream& rng) {
  const int p = config.p_assets;
  if (config.sigma_mode == SigmaMode::identity) return Matrix::Identity(p, p);
  const double df = config.wishart_df > 0.0 ? config.wishart_df : 2.0 * p;
  const Matrix scale_chol =
      Matrix::Identity(p, p) / std::sqrt(2.0 * static_cast<double>(p));
  Matrix sigma = wishart_draw(df, scale_chol, rng);
  sigma *= static_cast<double>(p) / sigma.trace();
  return sigma;
}

MarketModel build_market(const GeneratorConfig& config, RngStream& rng) {
  validate(config);
  Matrix sigma = draw_sigma(config, rng);
  return build_market(config, std::move(sigma), rng);
}

MarketModel build_market(const GeneratorConfig& config, Matrix sigma,
                         RngStream& rng) {
  validate(config);
  const int p = config.p_assets;
  const int f = config.n_features;
  Matrix dir;
  switch (config.mu_direction) {
    case MuDirection::first_axis:
      dir = Matrix::Zero(p, f);
      dir.row(0).setOnes();
      break;
    case MuDirection::uniform_sphere:
      dir.resize(p, f);
      for (int j = 0; j < f; ++j)
        for (int i = 0; i < p; ++i) dir(i, j) = rng.normal();
      break;
    case MuDirection::given:
      dir = config.direction;
      break;
  }
  const Matrix sigma_dir = sigma * dir;
  const double norm_sq = (dir.transpose() * sigma_dir).trace();
  if (!(norm_sq > 0.0)) {
    fail(ErrorCode::InvalidParameter, "generator: direction is zero");
  }
  Matrix coeffs = sigma_dir * (config.target_snr / std::sqrt(norm_sq));
  if (f == 1) {
    return MarketModel::unconditional(coeffs.col(0), std::move(sigma));
  }
  return MarketModel::conditional(std::move(coeffs), std::move(sigma),
                                  Matrix::Identity(f, f));
}

ReturnsSample sample_returns(const MarketModel& model, int n_obs,
                             const MarginalKind& marginal, RngStream& rng) {
  if (n_obs < 1) {
    fail(ErrorCode::InvalidParameter, "sample_returns: n_obs must be >= 1");
  }
  const StandardDraw draw(marginal);
  const Eigen::Index p = model.assets();
  const Eigen::Index f = model.features();

  // Row-major so each row's draws are consumed contiguously from the stream.
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor z(n_obs, p);
  draw.fill(rng, std::span<double>(z.data(), static_cast<std::size_t>(z.size())));

  ReturnsSample out;
  out.returns = z * model.sigma_chol().transpose();
  if (model.is_unconditional()) {
    out.returns.rowwise() += model.mu().transpose();
    return out;
  }

  // Features: leading constant column, the rest drawn with second moment
  // given by the trailing block of Sigma_f.
  const Matrix& moment = model.feature_moment();
  if (std::abs(moment(0, 0) - 1.0) > 1e-12 ||
      moment.row(0).tail(f - 1).cwiseAbs().maxCoeff() > 1e-12) {
    fail(ErrorCode::InvalidParameter,
         "sample_returns: feature moment must have a decoupled constant term");
  }
  const Matrix feat_chol = cholesky_lower(moment.bottomRightCorner(f - 1, f - 1));
  RowMajor g(n_obs, f - 1);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
  Matrix features(n_obs, f);
  features.col(0).setOnes();
  features.rightCols(f - 1) = g * feat_chol.transpose();
  out.returns += features * model.coeffs().transpose();
  out.features = std::move(features);
  return out;
}

}  // namespace qualbound
