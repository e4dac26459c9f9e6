#ifndef QUALBOUND_H
#define QUALBOUND_H

/*
 * C interface to the qualbound library: bounds on the expected quality of
 * estimated portfolios, the approximate law of the Markowitz portfolio's
 * quality, and replicated Monte Carlo experiments.
 *
 * Functions return a qb_status. On failure, qb_last_error() describes the
 * problem; the message is thread-local and valid until the next call made by
 * the same thread. Matrices are passed row-major.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(QB_BUILDING_LIBRARY)
#define QB_API __attribute__((visibility("default")))
#else
#define QB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qb_status {
  QB_OK = 0,
  QB_ERR_INVALID_PARAMETER = 1,
  QB_ERR_NOT_POSITIVE_DEFINITE = 2,
  QB_ERR_DEGENERATE_WISHART = 3,
  QB_ERR_NO_CONVERGENCE = 4,
  QB_ERR_DEGENERATE_PARAMS = 5,
  QB_ERR_DEGENERATE_MODEL = 6,
  QB_ERR_ZERO_PORTFOLIO = 7,
  QB_ERR_SINGULAR_COVARIANCE = 8,
  QB_ERR_SINGULAR_FEATURES = 9,
  QB_ERR_RANK_DEFICIENT = 10,
  QB_ERR_TOO_MANY_FAILURES = 11,
  QB_ERR_OUT_OF_MEMORY = 12,
  QB_ERR_INTERNAL = 13
} qb_status;

QB_API const char* qb_version(void);
QB_API const char* qb_last_error(void);
QB_API const char* qb_status_name(qb_status status);

/* Bounds. n_eff and the SNR (or squared SNR) must share a time unit. */
QB_API qb_status qb_bound(double n_eff, int dof, double effect, double* out);
QB_API qb_status qb_bound_conditional(double n_eff, int p, int f, double zeta,
                                      double* out);
QB_API qb_status qb_bound_subspace(double n_eff, int p0, int f,
                                   double zeta_j_sq, double* out);
QB_API qb_status qb_bound_hedged(double n_eff, int p, int k, int f,
                                 double delta_zeta_sq, double* out);
QB_API qb_status qb_capm_snr(const double* alpha, const double* beta, size_t p,
                             double sigma, double sigma_m, double* out);
QB_API qb_status qb_growth_condition(double n_eff, double p, double zeta,
                                     double dzeta_dp, int* out);
/* zeta_out and bound_out each receive `count` values. */
QB_API qb_status qb_scaling_curve(double gamma, double anchor_p,
                                  double anchor_zeta, double n_eff,
                                  const double* p_values, size_t count,
                                  double* zeta_out, double* bound_out);

/* Approximate law of the Markowitz portfolio's quality. */
QB_API qb_status qb_approx_cdf(double n_eff, int p, double zeta, double q,
                               double* out);
QB_API qb_status qb_approx_quantile(double n_eff, int p, double zeta,
                                    double level, double* out);
QB_API qb_status qb_approx_mean_sq(double n_eff, int p, double zeta,
                                   double* out);
QB_API qb_status qb_approx_sample(double n_eff, int p, double zeta,
                                  uint64_t seed, uint64_t stream_id,
                                  size_t count, double* out);

/* Special functions. */
QB_API qb_status qb_nct_cdf(double x, double delta, double nu, double* out);
QB_API qb_status qb_nct_quantile(double u, double delta, double nu,
                                 double* out);
QB_API qb_status qb_hyp2f2(double a1, double a2, double b1, double b2,
                           double x, double* out);

typedef enum qb_snr_method {
  QB_SNR_UNBIASED = 0,
  QB_SNR_TRUNCATED = 1
} qb_snr_method;

/* Estimate of the squared maximal SNR from an n x p sample of returns. */
QB_API qb_status qb_snr_estimate(const double* returns, size_t n, size_t p,
                                 qb_snr_method method, double* out);

/* Monte Carlo experiments. */

typedef enum qb_marginal {
  QB_MARGINAL_GAUSSIAN = 0,
  QB_MARGINAL_UNIFORM = 1,
  QB_MARGINAL_STUDENT_T = 2,
  QB_MARGINAL_TUKEY_H = 3,
  QB_MARGINAL_LAMBERT_W = 4
} qb_marginal;

typedef enum qb_sigma_mode {
  QB_SIGMA_IDENTITY = 0,
  QB_SIGMA_WISHART = 1
} qb_sigma_mode;

/* Direction of the mean before whitening. A random direction spreads any skew
 * in the innovations across the portfolio; the first axis concentrates it. */
typedef enum qb_mu_direction {
  QB_MU_FIRST_AXIS = 0,
  QB_MU_RANDOM = 1
} qb_mu_direction;

typedef enum qb_estimator {
  QB_ESTIMATOR_MARKOWITZ = 0,
  QB_ESTIMATOR_CONDITIONAL = 1,
  QB_ESTIMATOR_HEDGED = 2,  /* constraint = G, k x p */
  QB_ESTIMATOR_SUBSPACE = 3 /* constraint = J, p0 x p */
} qb_estimator;

typedef enum qb_sampling {
  QB_SAMPLING_FULL = 0,
  QB_SAMPLING_SUFFICIENT_STATISTICS = 1
} qb_sampling;

typedef struct qb_experiment_config {
  int n_obs;
  int p_assets;
  double zeta; /* per period */
  qb_marginal marginal;
  double marginal_param; /* t df, Tukey h or Lambert W gamma; NAN = default */
  qb_sigma_mode sigma_mode;
  double wishart_df; /* 0 selects 2 p */
  int n_features;
  qb_mu_direction mu_direction;
  qb_estimator estimator;
  const double* constraint; /* row-major, constraint_rows x p_assets */
  int constraint_rows;
  uint64_t replicates;
  uint64_t seed;
  int workers; /* 0 = hardware concurrency */
  int fix_sigma;
  qb_sampling sampling;
  int compute_ks;
  const double* quantile_levels; /* NULL selects the default levels */
  size_t n_quantile_levels;
} qb_experiment_config;

QB_API void qb_experiment_config_init(qb_experiment_config* config);

typedef struct qb_experiment_summary {
  double mean_q;
  double mean_q_sq;
  double se_q;
  double mean_bound;
  double mean_effect;
  int dof;
  int has_ks;
  double ks;
  uint64_t replicates_used;
  uint64_t replicates_failed;
  int subsampled;
  double wall_seconds;
} qb_experiment_summary;

typedef struct qb_experiment qb_experiment;

QB_API qb_status qb_experiment_run(const qb_experiment_config* config,
                                   qb_experiment** out);
QB_API void qb_experiment_free(qb_experiment* experiment);
QB_API qb_status qb_experiment_get_summary(const qb_experiment* experiment,
                                           qb_experiment_summary* out);
QB_API size_t qb_experiment_quantile_count(const qb_experiment* experiment);
QB_API qb_status qb_experiment_quantile(const qb_experiment* experiment,
                                        size_t index, double* level,
                                        double* value);
/* Sorted retained quality values; owned by the handle. */
QB_API size_t qb_experiment_sample_count(const qb_experiment* experiment);
QB_API const double* qb_experiment_samples(const qb_experiment* experiment);

typedef struct qb_sweep_cell {
  int n_obs;
  int p_assets;
  double zeta;
  double ks;
  double mean_q;
  double bound;
  uint64_t replicates_used;
  int ok;
  const char* error; /* empty when ok; owned by the sweep handle */
} qb_sweep_cell;

typedef struct qb_sweep qb_sweep;

/* Runs base once per (n, p, zeta) cell with the Markowitz estimator. */
QB_API qb_status qb_sweep_run(const int* n_obs, size_t n_count,
                              const int* p_assets, size_t p_count,
                              const double* zeta, size_t zeta_count,
                              const qb_experiment_config* base,
                              qb_sweep** out);
QB_API void qb_sweep_free(qb_sweep* sweep);
QB_API size_t qb_sweep_cell_count(const qb_sweep* sweep);
QB_API qb_status qb_sweep_cell_get(const qb_sweep* sweep, size_t index,
                                   qb_sweep_cell* out);

typedef struct qb_snr_curve qb_snr_curve;

/* Quartiles over n_perm column orderings of the estimated maximal SNR of
 * every leading block of k assets. returns is n x p row-major. */
QB_API qb_status qb_snr_curve_run(const double* returns, size_t n, size_t p,
                                  int n_perm, qb_snr_method method,
                                  uint64_t seed, qb_snr_curve** out);
QB_API void qb_snr_curve_free(qb_snr_curve* curve);
QB_API size_t qb_snr_curve_row_count(const qb_snr_curve* curve);
QB_API qb_status qb_snr_curve_row(const qb_snr_curve* curve, size_t index,
                                  int* k, double* q25, double* q50,
                                  double* q75);
QB_API size_t qb_snr_curve_warning_count(const qb_snr_curve* curve);
QB_API const char* qb_snr_curve_warning(const qb_snr_curve* curve,
                                        size_t index);

#ifdef __cplusplus
}
#endif

#endif
