#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "qualbound.h"

TEST_CASE("status names and last error") {
  CHECK(std::string(qb_status_name(QB_OK)) == "ok");
  CHECK(std::strlen(qb_version()) > 0);
  double out = -1;
  CHECK(qb_bound(0.0, 3, 1.0, &out) == QB_ERR_INVALID_PARAMETER);
  CHECK(std::strlen(qb_last_error()) > 0);
  CHECK(out == -1);
  CHECK(qb_bound(4.0, 6, 1.5625, &out) == QB_OK);
  CHECK(out == doctest::Approx(0.9316949906249123).epsilon(1e-14));
  CHECK(qb_bound(4.0, 6, 1.0, nullptr) == QB_ERR_INVALID_PARAMETER);
  CHECK(std::string(qb_status_name(static_cast<qb_status>(999))) == "unknown status");
}

TEST_CASE("bound family") {
  double out = 0;
  REQUIRE(qb_bound_conditional(4, 6, 2, 1.25, &out) == QB_OK);
  CHECK(out == doctest::Approx(2 * 1.5625 / std::sqrt(11 + 6.25)).epsilon(1e-14));
  REQUIRE(qb_bound_subspace(4, 3, 2, 0.5, &out) == QB_OK);
  CHECK(out == doctest::Approx(2 * 0.5 / std::sqrt(5 + 2.0)).epsilon(1e-14));
  REQUIRE(qb_bound_hedged(5, 11, 1, 1, 0.18, &out) == QB_OK);
  CHECK(out == doctest::Approx(std::sqrt(5.0) * 0.18 / std::sqrt(9.9)).epsilon(1e-14));
  CHECK(qb_bound_hedged(4, 6, 6, 1, 0.1, &out) == QB_ERR_INVALID_PARAMETER);

  const double alpha[] = {0.05, 0.05}, beta[] = {1.1, 1.1};
  REQUIRE(qb_capm_snr(alpha, beta, 2, 0.3, 0.18, &out) == QB_OK);
  CHECK(out == doctest::Approx(2 * 0.0025 / (0.09 + 2 * 0.0324 * 1.21)).epsilon(1e-13));

  int grows = -1;
  REQUIRE(qb_growth_condition(4, 1000, 1.25, 0.0, &grows) == QB_OK);
  CHECK(grows == 0);

  const double ps[] = {2, 6, 13};
  double z[3], b[3];
  REQUIRE(qb_scaling_curve(0.2, 6, 1.25, 4, ps, 3, z, b) == QB_OK);
  CHECK(z[1] == 1.25);
  CHECK(b[2] > b[0]);
  CHECK(qb_scaling_curve(0.2, 6, 1.25, 4, ps, 0, z, b) == QB_ERR_INVALID_PARAMETER);
}

TEST_CASE("approximation and special functions") {
  double out = 0;
  REQUIRE(qb_approx_mean_sq(4, 6, 1.25, &out) == QB_OK);
  CHECK(out == doctest::Approx(0.8677478550075928).epsilon(1e-10));
  REQUIRE(qb_approx_cdf(4, 6, 1.25, 1.25, &out) == QB_OK);
  CHECK(out == 1.0);
  double q = 0;
  REQUIRE(qb_approx_quantile(4, 6, 1.25, 0.5, &q) == QB_OK);
  REQUIRE(qb_approx_cdf(4, 6, 1.25, q, &out) == QB_OK);
  CHECK(out == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(qb_approx_quantile(4, 1, 1.25, 0.5, &q) == QB_ERR_DEGENERATE_PARAMS);

  std::vector<double> a(100), b(100);
  REQUIRE(qb_approx_sample(4, 6, 1.25, 7, 0, a.size(), a.data()) == QB_OK);
  REQUIRE(qb_approx_sample(4, 6, 1.25, 7, 0, b.size(), b.data()) == QB_OK);
  CHECK(a == b);
  for (double v : a) CHECK(std::abs(v) <= 1.25);

  REQUIRE(qb_nct_cdf(2.752656, 2.213707, 10, &out) == QB_OK);
  CHECK(out == doctest::Approx(0.6546577277235448).epsilon(1e-12));
  REQUIRE(qb_nct_quantile(0.5, 2, 10, &out) == QB_OK);
  CHECK(out == doctest::Approx(2.0536911511184903).epsilon(1e-10));
  REQUIRE(qb_hyp2f2(2.5, 1.5, 0.5, 3.5, 10, &out) == QB_OK);
  CHECK(out == doctest::Approx(91234.598478910957705928).epsilon(1e-12));
  CHECK(qb_nct_cdf(0, 0, -1, &out) == QB_ERR_INVALID_PARAMETER);
}

TEST_CASE("snr estimate") {
  // Two uncorrelated columns, exact mean and covariance known by construction.
  std::vector<double> r;
  for (int i = 0; i < 40; ++i) {
    r.push_back((i % 2 ? 1.0 : -1.0) + 0.5);
    r.push_back(((i / 2) % 2 ? 1.0 : -1.0));
  }
  double out = 0;
  REQUIRE(qb_snr_estimate(r.data(), 40, 2, QB_SNR_UNBIASED, &out) == QB_OK);
  const double z2 = 0.25 / (40.0 / 39.0);
  CHECK(out == doctest::Approx((1 - 2.0 / 40) * z2 - 2.0 / 40).epsilon(1e-12));
  CHECK(qb_snr_estimate(r.data(), 2, 2, QB_SNR_UNBIASED, &out) == QB_ERR_SINGULAR_COVARIANCE);
}

TEST_CASE("experiment handle") {
  qb_experiment_config c;
  qb_experiment_config_init(&c);
  CHECK(c.replicates >= 1);
  CHECK(c.quantile_levels == nullptr);
  CHECK(std::isnan(c.marginal_param));
  c.n_obs = 100;
  c.p_assets = 3;
  c.zeta = 0.1;
  c.replicates = 500;
  c.seed = 3;
  c.workers = 1;
  qb_experiment* e = nullptr;
  REQUIRE(qb_experiment_run(&c, &e) == QB_OK);
  qb_experiment_summary s;
  REQUIRE(qb_experiment_get_summary(e, &s) == QB_OK);
  CHECK(s.replicates_used == 500);
  CHECK(s.has_ks == 1);
  CHECK(s.dof == 3);
  CHECK(qb_experiment_sample_count(e) == 500);
  const double* x = qb_experiment_samples(e);
  for (size_t i = 1; i < 500; ++i) CHECK(x[i] >= x[i - 1]);
  REQUIRE(qb_experiment_quantile_count(e) == 8);
  double level = 0, value = 0;
  REQUIRE(qb_experiment_quantile(e, 5, &level, &value) == QB_OK);
  CHECK(level == 0.5);
  CHECK(qb_experiment_quantile(e, 8, &level, &value) == QB_ERR_INVALID_PARAMETER);
  qb_experiment_free(e);
  qb_experiment_free(nullptr);

  const double g[] = {1, 1, 1};
  c.estimator = QB_ESTIMATOR_HEDGED;
  c.constraint = g;
  c.constraint_rows = 1;
  c.compute_ks = 0;
  REQUIRE(qb_experiment_run(&c, &e) == QB_OK);
  REQUIRE(qb_experiment_get_summary(e, &s) == QB_OK);
  CHECK(s.dof == 2);
  CHECK(s.has_ks == 0);
  qb_experiment_free(e);

  c.constraint = nullptr;
  e = nullptr;
  CHECK(qb_experiment_run(&c, &e) == QB_ERR_INVALID_PARAMETER);
  CHECK(e == nullptr);

  qb_experiment_config_init(&c);
  CHECK(c.mu_direction == QB_MU_FIRST_AXIS);
  c.n_obs = 100;
  c.p_assets = 3;
  c.zeta = 0.1;
  c.replicates = 200;
  c.marginal = QB_MARGINAL_LAMBERT_W;
  REQUIRE(qb_experiment_run(&c, &e) == QB_OK);
  const std::vector<double> axis(qb_experiment_samples(e), qb_experiment_samples(e) + 200);
  qb_experiment_free(e);
  c.mu_direction = QB_MU_RANDOM;
  REQUIRE(qb_experiment_run(&c, &e) == QB_OK);
  CHECK(std::vector<double>(qb_experiment_samples(e), qb_experiment_samples(e) + 200) != axis);
  qb_experiment_free(e);
  c.mu_direction = static_cast<qb_mu_direction>(7);
  CHECK(qb_experiment_run(&c, &e) == QB_ERR_INVALID_PARAMETER);
  CHECK(std::string(qb_last_error()).find("mean direction") != std::string::npos);

  qb_experiment_config_init(&c);
  c.n_obs = 3;
  c.p_assets = 3;
  c.zeta = 0.1;
  c.replicates = 10;
  CHECK(qb_experiment_run(&c, &e) == QB_ERR_TOO_MANY_FAILURES);
}

TEST_CASE("sweep handle") {
  qb_experiment_config c;
  qb_experiment_config_init(&c);
  c.replicates = 100;
  c.sampling = QB_SAMPLING_SUFFICIENT_STATISTICS;
  const int ns[] = {3, 100};
  const int ps[] = {3};
  const double zs[] = {0.1};
  qb_sweep* s = nullptr;
  REQUIRE(qb_sweep_run(ns, 2, ps, 1, zs, 1, &c, &s) == QB_OK);
  REQUIRE(qb_sweep_cell_count(s) == 2);
  qb_sweep_cell cell;
  REQUIRE(qb_sweep_cell_get(s, 0, &cell) == QB_OK);
  CHECK(cell.n_obs == 3);
  CHECK(cell.ok == 0);
  CHECK(std::strlen(cell.error) > 0);
  REQUIRE(qb_sweep_cell_get(s, 1, &cell) == QB_OK);
  CHECK(cell.ok == 1);
  CHECK(std::string(cell.error).empty());
  CHECK(qb_sweep_cell_get(s, 2, &cell) == QB_ERR_INVALID_PARAMETER);
  qb_sweep_free(s);
}

TEST_CASE("snr curve handle") {
  std::vector<double> r;
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(std::sin((1.7 + j) * i * i) + 0.1);
  qb_snr_curve* c = nullptr;
  REQUIRE(qb_snr_curve_run(r.data(), 30, 3, 20, QB_SNR_TRUNCATED, 1, &c) == QB_OK);
  REQUIRE(qb_snr_curve_row_count(c) == 3);
  int k = 0;
  double a, b, d;
  REQUIRE(qb_snr_curve_row(c, 2, &k, &a, &b, &d) == QB_OK);
  CHECK(k == 3);
  CHECK(a <= b);
  CHECK(b <= d);
  CHECK(qb_snr_curve_warning_count(c) == 0);
  qb_snr_curve_free(c);
  CHECK(qb_snr_curve_run(r.data(), 30, 3, 0, QB_SNR_TRUNCATED, 1, &c) == QB_ERR_INVALID_PARAMETER);
}
