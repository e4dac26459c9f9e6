#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qualbound/dists.hpp"
#include "qualbound/marginals.hpp"
#include "qualbound/quality.hpp"

namespace qualbound {

/// Sample Markowitz portfolio (unconditional model only).
struct MarkowitzEstimator {};
/// Feature-linear Markowitz W = Sigma_hat^-1 B_hat.
struct ConditionalEstimator {};
/// Markowitz (or conditional) portfolio hedged against the rows of g using
/// the population covariance.
struct HedgedEstimator {
  Matrix g;
};
/// Markowitz (or conditional) fit on the returns J r, mapped back by J'.
struct SubspaceEstimator {
  Matrix j;
};
using Estimator = std::variant<MarkowitzEstimator, ConditionalEstimator,
                               HedgedEstimator, SubspaceEstimator>;

std::string describe(const Estimator& estimator);

enum class SamplingPath {
  /// Generate all n x p returns and estimate from them.
  full,
  /// Gaussian shortcut: draw the sample mean and covariance directly from
  /// their joint law (normal mean, independent Wishart covariance).
  sufficient_statistics,
};

inline const std::vector<double> kDefaultQuantileLevels = {
    0.005, 0.010, 0.025, 0.050, 0.250, 0.500, 0.750, 0.900};

struct ExperimentConfig {
  GeneratorConfig generator;
  Estimator estimator = MarkowitzEstimator{};
  std::uint64_t replicates = 1;
  std::uint64_t seed = 0;
  int workers = 0;  // 0 picks hardware concurrency
  /// Draw Sigma once for the whole experiment instead of per replicate.
  bool fix_sigma = false;
  SamplingPath sampling = SamplingPath::full;
  std::vector<double> quantile_levels = kDefaultQuantileLevels;
  /// Compute the KS distance to the quality approximation (Markowitz only).
  bool compute_ks = true;
};

void validate(const ExperimentConfig& config);

/// Samples beyond this count are reduced to a stratified subsample.
inline constexpr std::size_t kMaxRetainedSamples = 10'000'000;
inline constexpr std::size_t kStratifiedSampleSize = 1'000'000;

struct ExperimentResult {
  std::vector<std::pair<double, double>> quantiles;  // (level, value)
  double mean_q = 0.0;
  double mean_q_sq = 0.0;
  double se_q = 0.0;  // standard error of mean_q
  /// Average over replicates of each replicate's bound (the bound's effect
  /// varies per replicate only for hedged or subspace estimators with a
  /// random Sigma).
  double mean_bound = 0.0;
  double mean_effect = 0.0;
  int dof = 0;
  std::optional<double> ks_vs_approx;
  std::uint64_t replicates_used = 0;
  std::uint64_t replicates_failed = 0;
  /// Sorted quality values (per period); a stratified subsample when more
  /// than kMaxRetainedSamples replicates succeeded.
  std::vector<double> sorted_q;
  bool subsampled = false;
  double wall_seconds = 0.0;
  ExperimentConfig config;
};

/// Quantile of sorted data with linear interpolation between order
/// statistics (Hyndman-Fan type 7).
double sorted_quantile(std::span<const double> sorted, double level);

/// Evenly spaced order statistics: element floor((j + 1/2) N / m), j < m.
std::vector<double> stratified_subsample(std::span<const double> sorted,
                                         std::size_t m);

/// Runs the replicated experiment. Replicate r draws from stream id r, so
/// aggregates are bitwise independent of the worker count. Replicates whose
/// estimate is singular are excluded; more than 0.1% of them raises
/// TooManyFailures.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// KS distance between the retained quality sample and the approximation.
double ks_vs_approximation(const ExperimentResult& result,
                           const QualApproxParams& params);

struct SweepGrid {
  std::vector<int> n_obs;
  std::vector<int> p_assets;
  std::vector<double> zeta;  // per period
};

struct SweepCell {
  int n_obs = 0;
  int p_assets = 0;
  double zeta = 0.0;
  double ks = 0.0;
  double mean_q = 0.0;
  double bound = 0.0;
  std::uint64_t replicates_used = 0;
  bool ok = false;
  std::string error;
};

/// One experiment per grid cell, sorted by (n, p, zeta). Every cell reuses
/// the base seed, so cells share random streams. A failing cell is reported
/// with ok = false rather than aborting the sweep.
std::vector<SweepCell> sweep(const SweepGrid& grid,
                             const ExperimentConfig& base);

struct SnrCurveRow {
  int k = 0;  // number of leading assets
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
};

struct SnrCurve {
  std::vector<SnrCurveRow> rows;
  std::vector<std::string> warnings;
  SnrMethod method = SnrMethod::truncated;
};

/// For each of n_perm random orderings of the columns, estimates the maximal
/// SNR of every prefix of k assets as sqrt(max(0, snr_estimate)); reports the
/// quartiles over permutations for each k. Prefixes with k >= n are skipped
/// with a warning; a singular prefix covariance otherwise throws
/// SingularCovariance.
SnrCurve permutation_snr_curve(const Matrix& returns, int n_perm,
                               SnrMethod method, RngStream& rng);

}  // namespace qualbound
