#include "qualbound.h"

#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "qualbound/bounds.hpp"
#include "qualbound/dists.hpp"
#include "qualbound/error.hpp"
#include "qualbound/montecarlo.hpp"
#include "qualbound/quality.hpp"

using namespace qualbound;

struct qb_experiment {
  ExperimentResult result;
};

struct qb_sweep {
  std::vector<SweepCell> cells;
};

struct qb_snr_curve {
  SnrCurve curve;
};

namespace {

thread_local std::string last_error;

qb_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return QB_ERR_INVALID_PARAMETER;
    case ErrorCode::NotPositiveDefinite: return QB_ERR_NOT_POSITIVE_DEFINITE;
    case ErrorCode::DegenerateWishart: return QB_ERR_DEGENERATE_WISHART;
    case ErrorCode::NoConvergence: return QB_ERR_NO_CONVERGENCE;
    case ErrorCode::DegenerateParams: return QB_ERR_DEGENERATE_PARAMS;
    case ErrorCode::DegenerateModel: return QB_ERR_DEGENERATE_MODEL;
    case ErrorCode::ZeroPortfolio: return QB_ERR_ZERO_PORTFOLIO;
    case ErrorCode::SingularCovariance: return QB_ERR_SINGULAR_COVARIANCE;
    case ErrorCode::SingularFeatures: return QB_ERR_SINGULAR_FEATURES;
    case ErrorCode::RankDeficient: return QB_ERR_RANK_DEFICIENT;
    case ErrorCode::TooManyFailures: return QB_ERR_TOO_MANY_FAILURES;
  }
  return QB_ERR_INTERNAL;
}

qb_status set_error(qb_status status, const char* message) {
  last_error = message;
  return status;
}

template <class F>
qb_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return QB_OK;
  } catch (const Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(QB_ERR_OUT_OF_MEMORY, "out of memory");
  } catch (const std::exception& e) {
    return set_error(QB_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(QB_ERR_INTERNAL, "unknown exception");
  }
}

void require(const void* ptr, const char* name) {
  if (ptr == nullptr) {
    fail(ErrorCode::InvalidParameter, std::string(name) + " is null");
  }
}

Matrix row_major(const double* data, std::size_t rows, std::size_t cols) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          data[i * cols + j];
    }
  }
  return m;
}

MarginalKind to_marginal(qb_marginal kind, double param) {
  const bool given = !std::isnan(param);
  switch (kind) {
    case QB_MARGINAL_GAUSSIAN: return Gaussian{};
    case QB_MARGINAL_UNIFORM: return Uniform{};
    case QB_MARGINAL_STUDENT_T: return given ? StudentT{param} : StudentT{};
    case QB_MARGINAL_TUKEY_H: return given ? TukeyH{param} : TukeyH{};
    case QB_MARGINAL_LAMBERT_W: return given ? LambertW{param} : LambertW{};
  }
  fail(ErrorCode::InvalidParameter, "unknown marginal");
}

SnrMethod to_method(qb_snr_method method) {
  switch (method) {
    case QB_SNR_UNBIASED: return SnrMethod::unbiased;
    case QB_SNR_TRUNCATED: return SnrMethod::truncated;
  }
  fail(ErrorCode::InvalidParameter, "unknown SNR method");
}

ExperimentConfig to_config(const qb_experiment_config& c) {
  ExperimentConfig config;
  GeneratorConfig& gen = config.generator;
  gen.n_obs = c.n_obs;
  gen.p_assets = c.p_assets;
  gen.target_snr = c.zeta;
  gen.marginal = to_marginal(c.marginal, c.marginal_param);
  switch (c.sigma_mode) {
    case QB_SIGMA_IDENTITY: gen.sigma_mode = SigmaMode::identity; break;
    case QB_SIGMA_WISHART: gen.sigma_mode = SigmaMode::wishart; break;
    default: fail(ErrorCode::InvalidParameter, "unknown sigma mode");
  }
  gen.wishart_df = c.wishart_df;
  gen.n_features = c.n_features;
  switch (c.mu_direction) {
    case QB_MU_FIRST_AXIS: gen.mu_direction = MuDirection::first_axis; break;
    case QB_MU_RANDOM: gen.mu_direction = MuDirection::uniform_sphere; break;
    default: fail(ErrorCode::InvalidParameter, "unknown mean direction");
  }

  auto constraint = [&] {
    require(c.constraint, "constraint");
    if (c.constraint_rows < 1 || c.p_assets < 1) {
      fail(ErrorCode::InvalidParameter, "constraint needs at least one row");
    }
    return row_major(c.constraint, static_cast<std::size_t>(c.constraint_rows),
                     static_cast<std::size_t>(c.p_assets));
  };
  switch (c.estimator) {
    case QB_ESTIMATOR_MARKOWITZ: config.estimator = MarkowitzEstimator{}; break;
    case QB_ESTIMATOR_CONDITIONAL: config.estimator = ConditionalEstimator{}; break;
    case QB_ESTIMATOR_HEDGED: config.estimator = HedgedEstimator{constraint()}; break;
    case QB_ESTIMATOR_SUBSPACE: config.estimator = SubspaceEstimator{constraint()}; break;
    default: fail(ErrorCode::InvalidParameter, "unknown estimator");
  }
  config.replicates = c.replicates;
  config.seed = c.seed;
  config.workers = c.workers;
  config.fix_sigma = c.fix_sigma != 0;
  switch (c.sampling) {
    case QB_SAMPLING_FULL: config.sampling = SamplingPath::full; break;
    case QB_SAMPLING_SUFFICIENT_STATISTICS:
      config.sampling = SamplingPath::sufficient_statistics;
      break;
    default: fail(ErrorCode::InvalidParameter, "unknown sampling path");
  }
  config.compute_ks = c.compute_ks != 0;
  if (c.quantile_levels != nullptr) {
    config.quantile_levels.assign(c.quantile_levels,
                                  c.quantile_levels + c.n_quantile_levels);
  }
  return config;
}

}  // namespace

extern "C" {

const char* qb_version(void) { return QUALBOUND_VERSION; }

const char* qb_last_error(void) { return last_error.c_str(); }

const char* qb_status_name(qb_status status) {
  switch (status) {
    case QB_OK: return "ok";
    case QB_ERR_INVALID_PARAMETER: return "invalid parameter";
    case QB_ERR_NOT_POSITIVE_DEFINITE: return "not positive definite";
    case QB_ERR_DEGENERATE_WISHART: return "degenerate Wishart";
    case QB_ERR_NO_CONVERGENCE: return "no convergence";
    case QB_ERR_DEGENERATE_PARAMS: return "degenerate parameters";
    case QB_ERR_DEGENERATE_MODEL: return "degenerate model";
    case QB_ERR_ZERO_PORTFOLIO: return "zero portfolio";
    case QB_ERR_SINGULAR_COVARIANCE: return "singular covariance";
    case QB_ERR_SINGULAR_FEATURES: return "singular features";
    case QB_ERR_RANK_DEFICIENT: return "rank deficient";
    case QB_ERR_TOO_MANY_FAILURES: return "too many failures";
    case QB_ERR_OUT_OF_MEMORY: return "out of memory";
    case QB_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

qb_status qb_bound(double n_eff, int dof, double effect, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = qual_bound({n_eff, dof, effect});
  });
}

qb_status qb_bound_conditional(double n_eff, int p, int f, double zeta,
                               double* out) {
  return guarded([&] {
    require(out, "out");
    *out = qual_bound_conditional(n_eff, p, f, zeta);
  });
}

qb_status qb_bound_subspace(double n_eff, int p0, int f, double zeta_j_sq,
                            double* out) {
  return guarded([&] {
    require(out, "out");
    *out = qual_bound_subspace(n_eff, p0, f, zeta_j_sq);
  });
}

qb_status qb_bound_hedged(double n_eff, int p, int k, int f,
                          double delta_zeta_sq, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = qual_bound_hedged(n_eff, p, k, f, delta_zeta_sq);
  });
}

qb_status qb_capm_snr(const double* alpha, const double* beta, size_t p,
                      double sigma, double sigma_m, double* out) {
  return guarded([&] {
    require(alpha, "alpha");
    require(beta, "beta");
    require(out, "out");
    *out = capm_snr({alpha, p}, {beta, p}, sigma, sigma_m);
  });
}

qb_status qb_growth_condition(double n_eff, double p, double zeta,
                              double dzeta_dp, int* out) {
  return guarded([&] {
    require(out, "out");
    *out = growth_condition(n_eff, p, zeta, dzeta_dp) ? 1 : 0;
  });
}

qb_status qb_scaling_curve(double gamma, double anchor_p, double anchor_zeta,
                           double n_eff, const double* p_values, size_t count,
                           double* zeta_out, double* bound_out) {
  return guarded([&] {
    require(p_values, "p_values");
    require(zeta_out, "zeta_out");
    require(bound_out, "bound_out");
    const auto curve =
        scaling_curve(gamma, anchor_p, anchor_zeta, n_eff, {p_values, count});
    for (std::size_t i = 0; i < curve.size(); ++i) {
      zeta_out[i] = curve[i].zeta;
      bound_out[i] = curve[i].bound;
    }
  });
}

qb_status qb_approx_cdf(double n_eff, int p, double zeta, double q,
                        double* out) {
  return guarded([&] {
    require(out, "out");
    *out = qual_approx_cdf(q, {n_eff, p, zeta});
  });
}

qb_status qb_approx_quantile(double n_eff, int p, double zeta, double level,
                             double* out) {
  return guarded([&] {
    require(out, "out");
    *out = qual_approx_quantile(level, {n_eff, p, zeta});
  });
}

qb_status qb_approx_mean_sq(double n_eff, int p, double zeta, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = expected_sq_quality({n_eff, p, zeta});
  });
}

qb_status qb_approx_sample(double n_eff, int p, double zeta, uint64_t seed,
                           uint64_t stream_id, size_t count, double* out) {
  return guarded([&] {
    require(out, "out");
    const QualApproxParams params{n_eff, p, zeta};
    validate(params);
    RngStream rng(seed, stream_id);
    for (std::size_t i = 0; i < count; ++i) {
      out[i] = qual_approx_sample(params, rng);
    }
  });
}

qb_status qb_nct_cdf(double x, double delta, double nu, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = nct_cdf(x, delta, nu);
  });
}

qb_status qb_nct_quantile(double u, double delta, double nu, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = nct_quantile(u, delta, nu);
  });
}

qb_status qb_hyp2f2(double a1, double a2, double b1, double b2, double x,
                    double* out) {
  return guarded([&] {
    require(out, "out");
    *out = hyp2f2(a1, a2, b1, b2, x);
  });
}

qb_status qb_snr_estimate(const double* returns, size_t n, size_t p,
                          qb_snr_method method, double* out) {
  return guarded([&] {
    require(returns, "returns");
    require(out, "out");
    *out = snr_estimate({row_major(returns, n, p), std::nullopt},
                        to_method(method));
  });
}

void qb_experiment_config_init(qb_experiment_config* config) {
  if (config == nullptr) return;
  *config = qb_experiment_config{};
  config->n_obs = 2;
  config->p_assets = 1;
  config->zeta = 0.0;
  config->marginal = QB_MARGINAL_GAUSSIAN;
  config->marginal_param = NAN;
  config->sigma_mode = QB_SIGMA_IDENTITY;
  config->wishart_df = 0.0;
  config->n_features = 1;
  config->mu_direction = QB_MU_FIRST_AXIS;
  config->estimator = QB_ESTIMATOR_MARKOWITZ;
  config->constraint = nullptr;
  config->constraint_rows = 0;
  config->replicates = 1;
  config->seed = 0;
  config->workers = 0;
  config->fix_sigma = 0;
  config->sampling = QB_SAMPLING_FULL;
  config->compute_ks = 1;
  config->quantile_levels = nullptr;
  config->n_quantile_levels = 0;
}

qb_status qb_experiment_run(const qb_experiment_config* config,
                            qb_experiment** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<qb_experiment>();
    handle->result = run_experiment(to_config(*config));
    *out = handle.release();
  });
}

void qb_experiment_free(qb_experiment* experiment) { delete experiment; }

qb_status qb_experiment_get_summary(const qb_experiment* experiment,
                                    qb_experiment_summary* out) {
  return guarded([&] {
    require(experiment, "experiment");
    require(out, "out");
    const ExperimentResult& r = experiment->result;
    out->mean_q = r.mean_q;
    out->mean_q_sq = r.mean_q_sq;
    out->se_q = r.se_q;
    out->mean_bound = r.mean_bound;
    out->mean_effect = r.mean_effect;
    out->dof = r.dof;
    out->has_ks = r.ks_vs_approx.has_value() ? 1 : 0;
    out->ks = r.ks_vs_approx.value_or(NAN);
    out->replicates_used = r.replicates_used;
    out->replicates_failed = r.replicates_failed;
    out->subsampled = r.subsampled ? 1 : 0;
    out->wall_seconds = r.wall_seconds;
  });
}

size_t qb_experiment_quantile_count(const qb_experiment* experiment) {
  return experiment == nullptr ? 0 : experiment->result.quantiles.size();
}

qb_status qb_experiment_quantile(const qb_experiment* experiment, size_t index,
                                 double* level, double* value) {
  return guarded([&] {
    require(experiment, "experiment");
    const auto& q = experiment->result.quantiles;
    if (index >= q.size()) {
      fail(ErrorCode::InvalidParameter, "quantile index out of range");
    }
    if (level != nullptr) *level = q[index].first;
    if (value != nullptr) *value = q[index].second;
  });
}

size_t qb_experiment_sample_count(const qb_experiment* experiment) {
  return experiment == nullptr ? 0 : experiment->result.sorted_q.size();
}

const double* qb_experiment_samples(const qb_experiment* experiment) {
  return experiment == nullptr ? nullptr : experiment->result.sorted_q.data();
}

qb_status qb_sweep_run(const int* n_obs, size_t n_count, const int* p_assets,
                       size_t p_count, const double* zeta, size_t zeta_count,
                       const qb_experiment_config* base, qb_sweep** out) {
  return guarded([&] {
    require(n_obs, "n_obs");
    require(p_assets, "p_assets");
    require(zeta, "zeta");
    require(base, "base");
    require(out, "out");
    *out = nullptr;
    SweepGrid grid{{n_obs, n_obs + n_count},
                   {p_assets, p_assets + p_count},
                   {zeta, zeta + zeta_count}};
    qb_experiment_config markowitz_base = *base;
    markowitz_base.estimator = QB_ESTIMATOR_MARKOWITZ;
    auto handle = std::make_unique<qb_sweep>();
    handle->cells = sweep(grid, to_config(markowitz_base));
    *out = handle.release();
  });
}

void qb_sweep_free(qb_sweep* sweep) { delete sweep; }

size_t qb_sweep_cell_count(const qb_sweep* sweep) {
  return sweep == nullptr ? 0 : sweep->cells.size();
}

qb_status qb_sweep_cell_get(const qb_sweep* sweep, size_t index,
                            qb_sweep_cell* out) {
  return guarded([&] {
    require(sweep, "sweep");
    require(out, "out");
    if (index >= sweep->cells.size()) {
      fail(ErrorCode::InvalidParameter, "cell index out of range");
    }
    const SweepCell& c = sweep->cells[index];
    out->n_obs = c.n_obs;
    out->p_assets = c.p_assets;
    out->zeta = c.zeta;
    out->ks = c.ks;
    out->mean_q = c.mean_q;
    out->bound = c.bound;
    out->replicates_used = c.replicates_used;
    out->ok = c.ok ? 1 : 0;
    out->error = c.error.c_str();
  });
}

qb_status qb_snr_curve_run(const double* returns, size_t n, size_t p,
                           int n_perm, qb_snr_method method, uint64_t seed,
                           qb_snr_curve** out) {
  return guarded([&] {
    require(returns, "returns");
    require(out, "out");
    *out = nullptr;
    RngStream rng(seed, 0);
    auto handle = std::make_unique<qb_snr_curve>();
    handle->curve = permutation_snr_curve(row_major(returns, n, p), n_perm,
                                          to_method(method), rng);
    *out = handle.release();
  });
}

void qb_snr_curve_free(qb_snr_curve* curve) { delete curve; }

size_t qb_snr_curve_row_count(const qb_snr_curve* curve) {
  return curve == nullptr ? 0 : curve->curve.rows.size();
}

qb_status qb_snr_curve_row(const qb_snr_curve* curve, size_t index, int* k,
                           double* q25, double* q50, double* q75) {
  return guarded([&] {
    require(curve, "curve");
    if (index >= curve->curve.rows.size()) {
      fail(ErrorCode::InvalidParameter, "row index out of range");
    }
    const SnrCurveRow& row = curve->curve.rows[index];
    if (k != nullptr) *k = row.k;
    if (q25 != nullptr) *q25 = row.q25;
    if (q50 != nullptr) *q50 = row.q50;
    if (q75 != nullptr) *q75 = row.q75;
  });
}

size_t qb_snr_curve_warning_count(const qb_snr_curve* curve) {
  return curve == nullptr ? 0 : curve->curve.warnings.size();
}

const char* qb_snr_curve_warning(const qb_snr_curve* curve, size_t index) {
  if (curve == nullptr || index >= curve->curve.warnings.size()) return nullptr;
  return curve->curve.warnings[index].c_str();
}

}  // extern "C"
