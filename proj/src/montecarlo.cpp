#include "qualbound/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>

#include "qualbound/bounds.hpp"
#include "qualbound/error.hpp"

namespace qualbound {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::uint64_t kFixedSigmaStream =
    std::numeric_limits<std::uint64_t>::max();
constexpr std::uint64_t kChunk = 256;
constexpr double kMaxFailureFraction = 1e-3;

struct ReplicateOutcome {
  double q = std::numeric_limits<double>::quiet_NaN();
  double bound = 0.0;
  double effect = 0.0;
};

bool is_estimation_failure(ErrorCode code) {
  return code == ErrorCode::SingularCovariance ||
         code == ErrorCode::SingularFeatures ||
         code == ErrorCode::NotPositiveDefinite ||
         code == ErrorCode::ZeroPortfolio;
}

Matrix chol_or_singular(const Matrix& cov) {
  try {
    return cholesky_lower(cov);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    fail(ErrorCode::SingularCovariance, "estimated covariance is singular");
  }
}

// Unconditional estimators only need the sample mean and covariance.
Vector estimate_from_moments(const Estimator& estimator, const Vector& mean,
                             const Matrix& cov, const MarketModel& model) {
  return std::visit(
      overloaded{
          [&](const MarkowitzEstimator&) -> Vector {
            return solve_with_cholesky(chol_or_singular(cov), mean);
          },
          [&](const ConditionalEstimator&) -> Vector {
            return solve_with_cholesky(chol_or_singular(cov), mean);
          },
          [&](const HedgedEstimator& h) -> Vector {
            const Vector w = solve_with_cholesky(chol_or_singular(cov), mean);
            return hedge_transform(w, model.sigma(), h.g);
          },
          [&](const SubspaceEstimator& s) -> Vector {
            Matrix sub_cov = s.j * cov * s.j.transpose();
            sub_cov = 0.5 * (sub_cov + sub_cov.transpose());
            const Vector sub_mean = s.j * mean;
            return s.j.transpose() *
                   solve_with_cholesky(chol_or_singular(sub_cov), sub_mean);
          },
      },
      estimator);
}

Matrix estimate_conditional(const Estimator& estimator,
                            const ReturnsSample& sample,
                            const MarketModel& model) {
  return std::visit(
      overloaded{
          [&](const MarkowitzEstimator&) -> Matrix {
            fail(ErrorCode::InvalidParameter,
                 "markowitz estimator needs an unconditional model");
          },
          [&](const ConditionalEstimator&) -> Matrix {
            return conditional_markowitz(sample);
          },
          [&](const HedgedEstimator& h) -> Matrix {
            return hedge_transform(conditional_markowitz(sample),
                                   model.sigma(), h.g);
          },
          [&](const SubspaceEstimator& s) -> Matrix {
            ReturnsSample projected{sample.returns * s.j.transpose(),
                                    sample.features};
            return s.j.transpose() * conditional_markowitz(projected);
          },
      },
      estimator);
}

// Degrees of freedom and effect of the bound matching the estimator.
std::pair<int, double> bound_terms(const Estimator& estimator,
                                   const MarketModel& model, int p, int f,
                                   double zeta) {
  return std::visit(
      overloaded{
          [&](const MarkowitzEstimator&) {
            return std::pair{f * p, zeta * zeta};
          },
          [&](const ConditionalEstimator&) {
            return std::pair{f * p, zeta * zeta};
          },
          [&](const HedgedEstimator& h) {
            const int k = static_cast<int>(h.g.rows());
            return std::pair{f * (p - k), hedged_snr_gap(model, h.g)};
          },
          [&](const SubspaceEstimator& s) {
            const int p0 = static_cast<int>(s.j.rows());
            return std::pair{f * p0, subspace_snr(model, s.j)};
          },
      },
      estimator);
}

class ReplicateRunner {
 public:
  explicit ReplicateRunner(const ExperimentConfig& config)
      : config_(config), gen_(config.generator) {
    if (config.fix_sigma) {
      RngStream rng(config.seed, kFixedSigmaStream);
      fixed_sigma_ = draw_sigma(gen_, rng);
    }
  }

  ReplicateOutcome run(std::uint64_t replicate) const {
    RngStream rng(config_.seed, replicate);
    Matrix sigma = fixed_sigma_ ? *fixed_sigma_ : draw_sigma(gen_, rng);
    const MarketModel model = build_market(gen_, std::move(sigma), rng);
    const int p = gen_.p_assets;
    const int f = gen_.n_features;
    const int n = gen_.n_obs;

    ReplicateOutcome out;
    const auto [dof, effect] =
        bound_terms(config_.estimator, model, p, f, gen_.target_snr);
    out.effect = effect;
    out.bound = qual_bound({static_cast<double>(n), dof, effect});
    try {
      if (f == 1) {
        Vector mean;
        Matrix cov;
        if (config_.sampling == SamplingPath::sufficient_statistics) {
          // mean ~ N(mu, Sigma / n); (n - 1) cov ~ Wishart(n - 1, Sigma).
          const Matrix& chol = model.sigma_chol();
          Vector z(p);
          for (int i = 0; i < p; ++i) z[i] = rng.normal();
          mean = model.mu() +
                 chol.triangularView<Eigen::Lower>() * z /
                     std::sqrt(static_cast<double>(n));
          cov = wishart_draw(static_cast<double>(n - 1), chol, rng,
                             WishartMethod::bartlett) /
                static_cast<double>(n - 1);
        } else {
          const ReturnsSample sample =
              sample_returns(model, n, gen_.marginal, rng);
          SampleMoments m = sample_moments(sample.returns);
          mean = std::move(m.mean);
          cov = std::move(m.covariance);
        }
        const Vector w = estimate_from_moments(config_.estimator, mean, cov, model);
        out.q = qual(w, model);
      } else {
        const ReturnsSample sample = sample_returns(model, n, gen_.marginal, rng);
        const Matrix w = estimate_conditional(config_.estimator, sample, model);
        out.q = conditional_qual(w, model);
      }
    } catch (const Error& e) {
      if (!is_estimation_failure(e.code())) throw;
      out.q = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
  }

 private:
  const ExperimentConfig& config_;
  GeneratorConfig gen_;
  std::optional<Matrix> fixed_sigma_;
};

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

std::string describe(const Estimator& estimator) {
  return std::visit(
      overloaded{
          [](const MarkowitzEstimator&) { return std::string("markowitz"); },
          [](const ConditionalEstimator&) { return std::string("conditional"); },
          [](const HedgedEstimator& h) {
            return "hedged(k=" + std::to_string(h.g.rows()) + ")";
          },
          [](const SubspaceEstimator& s) {
            return "subspace(p0=" + std::to_string(s.j.rows()) + ")";
          },
      },
      estimator);
}

void validate(const ExperimentConfig& config) {
  validate(config.generator);
  const auto& gen = config.generator;
  if (config.replicates < 1) {
    fail(ErrorCode::InvalidParameter, "experiment: replicates must be >= 1");
  }
  if (config.workers < 0) {
    fail(ErrorCode::InvalidParameter, "experiment: workers must be >= 0");
  }
  for (const double level : config.quantile_levels) {
    if (!(level >= 0.0 && level <= 1.0)) {
      fail(ErrorCode::InvalidParameter,
           "experiment: quantile levels must lie in [0, 1]");
    }
  }
  if (std::holds_alternative<MarkowitzEstimator>(config.estimator) &&
      gen.n_features != 1) {
    fail(ErrorCode::InvalidParameter,
         "experiment: markowitz estimator needs n_features = 1");
  }
  if (const auto* h = std::get_if<HedgedEstimator>(&config.estimator)) {
    if (h->g.cols() != gen.p_assets || h->g.rows() < 1 ||
        h->g.rows() >= gen.p_assets) {
      fail(ErrorCode::InvalidParameter,
           "experiment: hedge matrix must be k x p with 1 <= k < p");
    }
  }
  if (const auto* s = std::get_if<SubspaceEstimator>(&config.estimator)) {
    if (s->j.cols() != gen.p_assets || s->j.rows() < 1 ||
        s->j.rows() > gen.p_assets) {
      fail(ErrorCode::InvalidParameter,
           "experiment: subspace matrix must be p0 x p with 1 <= p0 <= p");
    }
  }
  if (config.sampling == SamplingPath::sufficient_statistics &&
      (!std::holds_alternative<Gaussian>(gen.marginal) || gen.n_features != 1)) {
    fail(ErrorCode::InvalidParameter,
         "experiment: sufficient-statistics sampling needs gaussian returns "
         "and no features");
  }
}

double sorted_quantile(std::span<const double> sorted, double level) {
  if (sorted.empty()) {
    fail(ErrorCode::InvalidParameter, "quantile of empty sample");
  }
  const double h = (static_cast<double>(sorted.size()) - 1.0) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> stratified_subsample(std::span<const double> sorted,
                                         std::size_t m) {
  if (m >= sorted.size()) return {sorted.begin(), sorted.end()};
  std::vector<double> out(m);
  const double step = static_cast<double>(sorted.size()) / static_cast<double>(m);
  for (std::size_t j = 0; j < m; ++j) {
    out[j] = sorted[static_cast<std::size_t>((static_cast<double>(j) + 0.5) * step)];
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  const ReplicateRunner runner(config);
  const std::uint64_t reps = config.replicates;

  std::vector<ReplicateOutcome> outcomes(reps);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    try {
      for (;;) {
        const std::uint64_t begin = next.fetch_add(kChunk);
        if (begin >= reps) return;
        const std::uint64_t end = std::min(begin + kChunk, reps);
        for (std::uint64_t r = begin; r < end; ++r) outcomes[r] = runner.run(r);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next.store(reps);
    }
  };
  const int workers =
      static_cast<int>(std::min<std::uint64_t>(resolve_workers(config.workers),
                                               (reps + kChunk - 1) / kChunk));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  // Aggregate in replicate order so results do not depend on scheduling.
  ExperimentResult result;
  result.config = config;
  std::vector<double> values;
  values.reserve(reps);
  double sum = 0.0, sum_sq = 0.0, sum_bound = 0.0, sum_effect = 0.0;
  for (const ReplicateOutcome& o : outcomes) {
    if (std::isnan(o.q)) {
      ++result.replicates_failed;
      continue;
    }
    values.push_back(o.q);
    sum += o.q;
    sum_sq += o.q * o.q;
    sum_bound += o.bound;
    sum_effect += o.effect;
  }
  outcomes.clear();
  outcomes.shrink_to_fit();

  const auto failed = static_cast<double>(result.replicates_failed);
  if (values.empty() || failed > kMaxFailureFraction * static_cast<double>(reps)) {
    std::ostringstream msg;
    msg << result.replicates_failed << " of " << reps
        << " replicates failed (singular estimates); limit is 0.1%";
    fail(ErrorCode::TooManyFailures, msg.str());
  }

  const double used = static_cast<double>(values.size());
  result.replicates_used = values.size();
  result.mean_q = sum / used;
  result.mean_q_sq = sum_sq / used;
  const double var =
      used > 1.0 ? std::max(0.0, (sum_sq - sum * sum / used) / (used - 1.0)) : 0.0;
  result.se_q = std::sqrt(var / used);
  result.mean_bound = sum_bound / used;
  result.mean_effect = sum_effect / used;
  {
    const auto& gen = config.generator;
    result.dof = std::visit(
        overloaded{
            [&](const HedgedEstimator& h) {
              return gen.n_features * (gen.p_assets - static_cast<int>(h.g.rows()));
            },
            [&](const SubspaceEstimator& s) {
              return gen.n_features * static_cast<int>(s.j.rows());
            },
            [&](const auto&) { return gen.n_features * gen.p_assets; },
        },
        config.estimator);
  }

  std::sort(values.begin(), values.end());
  for (const double level : config.quantile_levels) {
    result.quantiles.emplace_back(level, sorted_quantile(values, level));
  }
  if (values.size() > kMaxRetainedSamples) {
    result.sorted_q = stratified_subsample(values, kStratifiedSampleSize);
    result.subsampled = true;
  } else {
    result.sorted_q = std::move(values);
  }

  const auto& gen = config.generator;
  if (config.compute_ks &&
      std::holds_alternative<MarkowitzEstimator>(config.estimator) &&
      gen.p_assets >= 2 && gen.target_snr > 0.0) {
    result.ks_vs_approx = ks_vs_approximation(
        result, {static_cast<double>(gen.n_obs), gen.p_assets, gen.target_snr});
  }
  result.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  return result;
}

double ks_vs_approximation(const ExperimentResult& result,
                           const QualApproxParams& params) {
  validate(params);
  return ks_statistic(result.sorted_q,
                      [&](double q) { return qual_approx_cdf(q, params); });
}

std::vector<SweepCell> sweep(const SweepGrid& grid,
                             const ExperimentConfig& base) {
  if (grid.n_obs.empty() || grid.p_assets.empty() || grid.zeta.empty()) {
    fail(ErrorCode::InvalidParameter, "sweep: every grid axis needs a value");
  }
  std::vector<SweepCell> cells;
  for (const int n : grid.n_obs) {
    for (const int p : grid.p_assets) {
      for (const double zeta : grid.zeta) {
        SweepCell cell;
        cell.n_obs = n;
        cell.p_assets = p;
        cell.zeta = zeta;
        ExperimentConfig config = base;
        config.generator.n_obs = n;
        config.generator.p_assets = p;
        config.generator.target_snr = zeta;
        config.estimator = MarkowitzEstimator{};
        config.generator.n_features = 1;
        try {
          const ExperimentResult r = run_experiment(config);
          cell.ks = r.ks_vs_approx.value_or(std::nan(""));
          cell.mean_q = r.mean_q;
          cell.bound = r.mean_bound;
          cell.replicates_used = r.replicates_used;
          cell.ok = true;
        } catch (const Error& e) {
          cell.ok = false;
          cell.error = e.what();
          cell.ks = cell.mean_q = std::nan("");
          cell.bound = qual_bound({static_cast<double>(n), p, zeta * zeta});
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  std::sort(cells.begin(), cells.end(), [](const SweepCell& a, const SweepCell& b) {
    return std::tie(a.n_obs, a.p_assets, a.zeta) <
           std::tie(b.n_obs, b.p_assets, b.zeta);
  });
  return cells;
}

SnrCurve permutation_snr_curve(const Matrix& returns, int n_perm,
                               SnrMethod method, RngStream& rng) {
  const Eigen::Index n = returns.rows();
  const Eigen::Index p = returns.cols();
  if (p < 1 || n < 2) {
    fail(ErrorCode::InvalidParameter,
         "permutation_snr_curve: need at least 2 periods and 1 asset");
  }
  if (n_perm < 1) {
    fail(ErrorCode::InvalidParameter,
         "permutation_snr_curve: n_perm must be positive");
  }
  SnrCurve curve;
  curve.method = method;
  const Eigen::Index k_max = std::min(p, n - 1);
  if (k_max < p) {
    std::ostringstream msg;
    msg << "skipping prefixes with " << k_max + 1 << ".." << p
        << " assets: not more periods (" << n << ") than assets";
    curve.warnings.push_back(msg.str());
  }

  const SampleMoments m = sample_moments(returns);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  // estimates[k - 1][perm]
  std::vector<std::vector<double>> estimates(static_cast<std::size_t>(k_max));
  for (auto& e : estimates) e.reserve(static_cast<std::size_t>(n_perm));

  Matrix chol(k_max, k_max);
  Vector white(k_max);
  for (int perm = 0; perm < n_perm; ++perm) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[rng.below(i + 1)]);
    }
    // Grow the Cholesky factor of the permuted prefix one asset at a time;
    // z^2 for the prefix is the squared norm of L^-1 mu.
    double z_sq = 0.0;
    double trace = 0.0;
    for (Eigen::Index k = 0; k < k_max; ++k) {
      const Eigen::Index a = order[static_cast<std::size_t>(k)];
      for (Eigen::Index j = 0; j < k; ++j) {
        double acc = m.covariance(a, order[static_cast<std::size_t>(j)]);
        for (Eigen::Index i = 0; i < j; ++i) acc -= chol(k, i) * chol(j, i);
        chol(k, j) = acc / chol(j, j);
      }
      double pivot = m.covariance(a, a);
      for (Eigen::Index i = 0; i < k; ++i) pivot -= chol(k, i) * chol(k, i);
      trace += m.covariance(a, a);
      const double tol = 1e-12 * trace / static_cast<double>(k + 1);
      if (!(pivot > tol) || !(pivot > 0.0)) {
        std::ostringstream msg;
        msg << "permutation_snr_curve: covariance of the first " << k + 1
            << " permuted assets is singular";
        fail(ErrorCode::SingularCovariance, msg.str());
      }
      chol(k, k) = std::sqrt(pivot);
      double acc = m.mean[a];
      for (Eigen::Index i = 0; i < k; ++i) acc -= chol(k, i) * white[i];
      white[k] = acc / chol(k, k);
      z_sq += white[k] * white[k];
      const double est = snr_estimate_from_stat(
          z_sq, static_cast<double>(n), static_cast<double>(k + 1), method);
      estimates[static_cast<std::size_t>(k)].push_back(std::sqrt(std::max(0.0, est)));
    }
  }

  for (Eigen::Index k = 0; k < k_max; ++k) {
    auto& e = estimates[static_cast<std::size_t>(k)];
    std::sort(e.begin(), e.end());
    curve.rows.push_back({static_cast<int>(k + 1), sorted_quantile(e, 0.25),
                          sorted_quantile(e, 0.5), sorted_quantile(e, 0.75)});
  }
  return curve;
}

}  // namespace qualbound
