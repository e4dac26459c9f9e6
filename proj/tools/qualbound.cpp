// qualbound command-line front end. Talks to the library only through the C
// interface in qualbound.h.

#include <qualbound.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "units.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace qbcli;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(qb_status status) {
  if (status == QB_OK) return;
  std::string msg = std::string(qb_status_name(status)) + ": " + qb_last_error();
  if (status == QB_ERR_INVALID_PARAMETER || status == QB_ERR_DEGENERATE_PARAMS) {
    throw UsageError(msg);
  }
  throw RuntimeFailure(msg);
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Seed precedence: --seed, then QUALBOUND_SEED, then 0.
std::uint64_t default_seed() {
  if (const char* env = std::getenv("QUALBOUND_SEED"); env && *env) {
    std::uint64_t value = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec != std::errc() || ptr != end) {
      throw UsageError(std::string("QUALBOUND_SEED is not an unsigned integer: ") + env);
    }
    return value;
  }
  return 0;
}

// Collects what a command produced so a manifest can describe the run.
class Run {
 public:
  Run(std::string command, std::vector<std::string> args)
      : command_(std::move(command)), args_(std::move(args)), start_(utc_now()) {}

  json params = json::object();
  json extra = json::object();
  std::optional<fs::path> out_dir;
  std::vector<std::string> warnings;

  // Writes `text` to stdout and, with --out, to out_dir/name.
  void emit(const std::string& name, const std::string& text, bool to_stdout = true) {
    if (to_stdout) std::cout << text;
    if (!out_dir) return;
    fs::create_directories(*out_dir);
    const fs::path path = *out_dir / name;
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw RuntimeFailure("cannot write " + path.string());
    outputs_.push_back(name);
  }

  void warn(const std::string& msg) {
    std::cerr << "warning: " << msg << "\n";
    warnings.push_back(msg);
  }

  void set_seed(std::uint64_t seed, bool explicit_flag) {
    seed_ = seed;
    if (!explicit_flag) {
      args_.push_back("--seed");
      args_.push_back(std::to_string(seed));
    }
  }

  void finish() {
    if (!out_dir) return;
    json m;
    m["command"] = command_;
    m["args"] = args_;
    m["parameters"] = params;
    if (seed_) m["seed"] = *seed_;
    m["tool_version"] = qb_version();
    m["start_time"] = start_;
    m["end_time"] = utc_now();
    for (auto& [k, v] : extra.items()) m[k] = v;
    m["warnings"] = warnings;
    m["outputs"] = outputs_;
    std::ofstream f(*out_dir / "manifest.json", std::ios::binary);
    f << m.dump(2) << "\n";
    if (!f) throw RuntimeFailure("cannot write manifest");
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  std::string start_;
  std::optional<std::uint64_t> seed_;
  std::vector<std::string> outputs_;
};

struct ExperimentFlags {
  double periods_per_year = kDefaultPeriodsPerYear;
  std::string marginal = "gaussian";
  double t_df = 4.0;
  double tukey_h = 0.15;
  double lambert_gamma = -0.2;
  std::string sigma_mode = "identity";
  double wishart_df = 0.0;
  bool fix_sigma = false;
  std::string mu_direction = "random";
  std::string sampling;
  std::uint64_t reps = 1000;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  cmd->add_option("--periods-per-year", f.periods_per_year, "Observations per year")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--marginal", f.marginal, "Return marginal")
      ->check(CLI::IsMember({"gaussian", "uniform", "t", "tukey", "lambert"}));
  cmd->add_option("--t-df", f.t_df, "Degrees of freedom of the t marginal");
  cmd->add_option("--tukey-h", f.tukey_h, "Tail parameter of the Tukey h marginal");
  cmd->add_option("--lambert-gamma", f.lambert_gamma, "Skew of the Lambert W marginal");
  cmd->add_option("--sigma-mode", f.sigma_mode, "Population covariance")
      ->check(CLI::IsMember({"identity", "wishart"}));
  cmd->add_option("--wishart-df", f.wishart_df, "Wishart degrees of freedom (0: 2p)");
  cmd->add_flag("--fix-sigma", f.fix_sigma, "Draw the covariance once per experiment");
  cmd->add_option("--mu-direction", f.mu_direction, "Mean direction: random or axis")
      ->check(CLI::IsMember({"random", "axis"}));
  cmd->add_option("--sampling", f.sampling, "full or sufficient")
      ->check(CLI::IsMember({"full", "sufficient"}));
  cmd->add_option("--reps", f.reps, "Replicates")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Seed (default: QUALBOUND_SEED or 0)");
  cmd->add_option("--workers", f.workers, "Worker threads (0: all cores)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", f.out, "Output directory");
}

qb_experiment_config base_config(const ExperimentFlags& f, const std::string& default_sampling) {
  qb_experiment_config c;
  qb_experiment_config_init(&c);
  if (f.marginal == "gaussian") {
    c.marginal = QB_MARGINAL_GAUSSIAN;
  } else if (f.marginal == "uniform") {
    c.marginal = QB_MARGINAL_UNIFORM;
  } else if (f.marginal == "t") {
    c.marginal = QB_MARGINAL_STUDENT_T;
    c.marginal_param = f.t_df;
  } else if (f.marginal == "tukey") {
    c.marginal = QB_MARGINAL_TUKEY_H;
    c.marginal_param = f.tukey_h;
  } else {
    c.marginal = QB_MARGINAL_LAMBERT_W;
    c.marginal_param = f.lambert_gamma;
  }
  c.sigma_mode = f.sigma_mode == "wishart" ? QB_SIGMA_WISHART : QB_SIGMA_IDENTITY;
  c.wishart_df = f.wishart_df;
  c.fix_sigma = f.fix_sigma ? 1 : 0;
  c.mu_direction = f.mu_direction == "axis" ? QB_MU_FIRST_AXIS : QB_MU_RANDOM;
  const std::string sampling = f.sampling.empty() ? default_sampling : f.sampling;
  c.sampling = sampling == "sufficient" ? QB_SAMPLING_SUFFICIENT_STATISTICS : QB_SAMPLING_FULL;
  c.replicates = f.reps;
  c.seed = f.seed;
  c.workers = f.workers;
  return c;
}

json experiment_params(const ExperimentFlags& f, const qb_experiment_config& c) {
  json j;
  j["periods_per_year"] = f.periods_per_year;
  j["marginal"] = f.marginal;
  if (f.marginal == "t") j["t_df"] = f.t_df;
  if (f.marginal == "tukey") j["tukey_h"] = f.tukey_h;
  if (f.marginal == "lambert") j["lambert_gamma"] = f.lambert_gamma;
  j["sigma_mode"] = f.sigma_mode;
  if (f.sigma_mode == "wishart") {
    j["wishart_df"] = f.wishart_df;
    j["fix_sigma"] = f.fix_sigma;
  }
  j["mu_direction"] = f.mu_direction;
  j["sampling"] = c.sampling == QB_SAMPLING_FULL ? "full" : "sufficient";
  j["reps"] = f.reps;
  j["seed"] = f.seed;
  return j;
}

int periods_from_years(double years, double ppy) {
  const double n = std::round(years_to_periods(years, ppy));
  if (!(n >= 2.0) || n > 1e9) throw UsageError("sample length must be at least 2 periods");
  return static_cast<int>(n);
}

// ---------------------------------------------------------------- bound

struct BoundFlags {
  double n_years = 0.0;
  int p = 0;
  std::optional<double> zeta_annual;
  int f = 1;
  std::optional<int> hedge_k;
  std::optional<double> delta_zeta_sq;
  std::optional<int> subspace_p0;
  std::string out;
};

void cmd_bound(const BoundFlags& b, Run& run) {
  json out;
  int dof = 0;
  double effect = 0.0;
  double bound = 0.0;
  if (b.hedge_k) {
    if (!b.delta_zeta_sq) throw UsageError("--hedge-k requires --delta-zeta-sq");
    out["theorem"] = "hedged";
    dof = b.f * (b.p - *b.hedge_k);
    effect = *b.delta_zeta_sq;
    check(qb_bound_hedged(b.n_years, b.p, *b.hedge_k, b.f, effect, &bound));
  } else {
    if (b.delta_zeta_sq) throw UsageError("--delta-zeta-sq requires --hedge-k");
    if (!b.zeta_annual) throw UsageError("--zeta-annual is required");
    effect = *b.zeta_annual * *b.zeta_annual;
    if (b.subspace_p0) {
      out["theorem"] = "subspace";
      dof = b.f * *b.subspace_p0;
      check(qb_bound_subspace(b.n_years, *b.subspace_p0, b.f, effect, &bound));
    } else {
      out["theorem"] = b.f > 1 ? "conditional" : "unconditional";
      dof = b.f * b.p;
      check(qb_bound_conditional(b.n_years, b.p, b.f, *b.zeta_annual, &bound));
    }
  }
  out["dof"] = dof;
  out["effect"] = effect;
  out["bound_annual"] = bound;
  run.params = {{"n_years", b.n_years}, {"p", b.p}, {"f", b.f}};
  if (b.zeta_annual) run.params["zeta_annual"] = *b.zeta_annual;
  if (b.hedge_k) run.params["hedge_k"] = *b.hedge_k;
  if (b.delta_zeta_sq) run.params["delta_zeta_sq"] = *b.delta_zeta_sq;
  if (b.subspace_p0) run.params["subspace_p0"] = *b.subspace_p0;
  run.emit("bound.json", out.dump() + "\n");
}

// ---------------------------------------------------------------- approx

struct ApproxFlags {
  double n_years = 0.0;
  int p = 0;
  double zeta_annual = 0.0;
  std::vector<double> quantiles;
  std::optional<double> cdf_at;
  bool mean_sq = false;
};

void cmd_approx(const ApproxFlags& a, Run& run) {
  if (a.p < 2) throw UsageError("approximation requires at least 2 assets");
  const int selected = (!a.quantiles.empty()) + a.cdf_at.has_value() + a.mean_sq;
  if (selected != 1) {
    throw UsageError("choose exactly one of --quantiles, --cdf-at, --mean-sq");
  }
  run.params = {{"n_years", a.n_years}, {"p", a.p}, {"zeta_annual", a.zeta_annual}};
  if (!a.quantiles.empty()) {
    run.params["quantiles"] = a.quantiles;
    std::ostringstream csv;
    csv << "level,value\n";
    for (const double level : a.quantiles) {
      double v = 0.0;
      check(qb_approx_quantile(a.n_years, a.p, a.zeta_annual, level, &v));
      csv << fmt(level) << "," << fmt(v) << "\n";
    }
    run.emit("quantiles.csv", csv.str());
  } else if (a.cdf_at) {
    run.params["cdf_at"] = *a.cdf_at;
    double v = 0.0;
    check(qb_approx_cdf(a.n_years, a.p, a.zeta_annual, *a.cdf_at, &v));
    json out{{"q", *a.cdf_at}, {"cdf", v}};
    run.emit("cdf.json", out.dump() + "\n");
  } else {
    run.params["mean_sq"] = true;
    double v = 0.0;
    check(qb_approx_mean_sq(a.n_years, a.p, a.zeta_annual, &v));
    json out{{"mean_sq_annual", v}};
    run.emit("mean_sq.json", out.dump() + "\n");
  }
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
  ExperimentFlags exp;
  int n_days = 0;
  int p = 0;
  double zeta_annual = 0.0;
  int features = 1;
  std::optional<int> hedge_k;
  std::optional<int> subspace_p0;
  std::vector<double> levels;
  bool no_ks = false;
};

// Hedge rows: the equal-weight portfolio, then single assets from the last.
std::vector<double> hedge_rows(int k, int p) {
  std::vector<double> g(static_cast<std::size_t>(k) * p, 0.0);
  for (int j = 0; j < p; ++j) g[j] = 1.0;
  for (int i = 1; i < k; ++i) g[static_cast<std::size_t>(i) * p + (p - i)] = 1.0;
  return g;
}

std::vector<double> subspace_rows(int p0, int p) {
  std::vector<double> j(static_cast<std::size_t>(p0) * p, 0.0);
  for (int i = 0; i < p0; ++i) j[static_cast<std::size_t>(i) * p + i] = 1.0;
  return j;
}

void cmd_simulate(const SimulateFlags& s, Run& run) {
  const double ppy = s.exp.periods_per_year;
  const double root = std::sqrt(ppy);
  qb_experiment_config c = base_config(s.exp, "full");
  c.n_obs = s.n_days;
  c.p_assets = s.p;
  c.zeta = snr_to_period(s.zeta_annual, ppy);
  c.n_features = s.features;
  c.compute_ks = s.no_ks ? 0 : 1;
  std::vector<double> constraint;
  std::string estimator = s.features > 1 ? "conditional" : "markowitz";
  if (s.hedge_k) {
    if (*s.hedge_k < 1 || *s.hedge_k >= s.p) throw UsageError("--hedge-k must lie in [1, p)");
    constraint = hedge_rows(*s.hedge_k, s.p);
    c.estimator = QB_ESTIMATOR_HEDGED;
    c.constraint_rows = *s.hedge_k;
    estimator = "hedged";
  } else if (s.subspace_p0) {
    if (*s.subspace_p0 < 1 || *s.subspace_p0 > s.p) {
      throw UsageError("--subspace-p0 must lie in [1, p]");
    }
    constraint = subspace_rows(*s.subspace_p0, s.p);
    c.estimator = QB_ESTIMATOR_SUBSPACE;
    c.constraint_rows = *s.subspace_p0;
    estimator = "subspace";
  } else if (s.features > 1) {
    c.estimator = QB_ESTIMATOR_CONDITIONAL;
  }
  c.constraint = constraint.empty() ? nullptr : constraint.data();
  if (!s.levels.empty()) {
    c.quantile_levels = s.levels.data();
    c.n_quantile_levels = s.levels.size();
  }

  run.params = {{"n_days", s.n_days}, {"p", s.p}, {"zeta_annual", s.zeta_annual},
                {"features", s.features}, {"estimator", estimator}};
  if (s.hedge_k) run.params["hedge_k"] = *s.hedge_k;
  if (s.subspace_p0) run.params["subspace_p0"] = *s.subspace_p0;
  run.params.update(experiment_params(s.exp, c));

  qb_experiment* raw = nullptr;
  check(qb_experiment_run(&c, &raw));
  std::unique_ptr<qb_experiment, decltype(&qb_experiment_free)> exp(raw, qb_experiment_free);
  qb_experiment_summary sum;
  check(qb_experiment_get_summary(exp.get(), &sum));

  json result;
  result["command"] = "simulate";
  result["parameters"] = run.params;
  result["replicates_used"] = sum.replicates_used;
  result["replicates_failed"] = sum.replicates_failed;
  result["mean_q"] = sum.mean_q * root;
  result["mean_q_sq"] = sum.mean_q_sq * ppy;
  result["se_q"] = sum.se_q * root;
  result["bound"] = sum.mean_bound * root;
  result["dof"] = sum.dof;
  result["effect"] = snr_sq_to_annual(sum.mean_effect, ppy);
  result["ks"] = sum.has_ks ? json(sum.ks) : json(nullptr);
  std::ostringstream csv;
  csv << "level,value\n";
  json quantiles = json::array();
  for (std::size_t i = 0; i < qb_experiment_quantile_count(exp.get()); ++i) {
    double level = 0.0, value = 0.0;
    check(qb_experiment_quantile(exp.get(), i, &level, &value));
    quantiles.push_back({{"level", level}, {"value", value * root}});
    csv << fmt(level) << "," << fmt(value * root) << "\n";
  }
  result["quantiles"] = quantiles;
  run.extra["wall_seconds"] = sum.wall_seconds;

  std::cout << "mean_q=" << fmt(sum.mean_q * root)
            << " ks=" << (sum.has_ks ? fmt(sum.ks) : std::string("na"))
            << " bound=" << fmt(sum.mean_bound * root)
            << " reps=" << sum.replicates_used << "\n";
  run.emit("result.json", result.dump(2) + "\n", false);
  run.emit("quantiles.csv", csv.str(), false);
}

// ---------------------------------------------------------------- sweep

struct SweepFlags {
  ExperimentFlags exp;
  std::vector<double> n_years;
  std::vector<int> p;
  std::vector<double> zeta;
};

void cmd_sweep(const SweepFlags& s, Run& run) {
  const double ppy = s.exp.periods_per_year;
  const double root = std::sqrt(ppy);
  qb_experiment_config c = base_config(s.exp, s.exp.marginal == "gaussian" ? "sufficient" : "full");
  std::vector<int> n_obs;
  for (const double y : s.n_years) n_obs.push_back(periods_from_years(y, ppy));
  std::vector<double> zeta;
  for (const double z : s.zeta) zeta.push_back(snr_to_period(z, ppy));

  run.params = {{"n_years", s.n_years}, {"p", s.p}, {"zeta_annual", s.zeta}};
  run.params.update(experiment_params(s.exp, c));

  qb_sweep* raw = nullptr;
  check(qb_sweep_run(n_obs.data(), n_obs.size(), s.p.data(), s.p.size(), zeta.data(),
                     zeta.size(), &c, &raw));
  std::unique_ptr<qb_sweep, decltype(&qb_sweep_free)> sw(raw, qb_sweep_free);
  std::ostringstream csv;
  csv << "n,p,zeta,ks,mean_q,bound\n";
  for (std::size_t i = 0; i < qb_sweep_cell_count(sw.get()); ++i) {
    qb_sweep_cell cell;
    check(qb_sweep_cell_get(sw.get(), i, &cell));
    if (!cell.ok) {
      run.warn("cell n=" + std::to_string(cell.n_obs) + " p=" + std::to_string(cell.p_assets) +
               " failed: " + cell.error);
    }
    csv << fmt(periods_to_years(cell.n_obs, ppy)) << "," << cell.p_assets << ","
        << fmt(snr_to_annual(cell.zeta, ppy)) << "," << fmt(cell.ks) << ","
        << fmt(cell.mean_q * root) << "," << fmt(cell.bound * root) << "\n";
  }
  run.emit("sweep.csv", csv.str());
}

// ---------------------------------------------------------------- diversify

struct DiversifyFlags {
  std::vector<double> gammas;
  double anchor_p = 6.0;
  double anchor_zeta = 1.25;
  double n_years = 4.0;
  int p_min = 2;
  int p_max = 200;
  std::vector<double> capm;
};

void cmd_diversify(const DiversifyFlags& d, Run& run) {
  if (d.p_min < 1 || d.p_max < d.p_min) throw UsageError("need 1 <= --p-min <= --p-max");
  if (d.gammas.empty() && d.capm.empty()) {
    throw UsageError("give --gamma-list and/or --capm");
  }
  std::vector<double> ps;
  for (int p = d.p_min; p <= d.p_max; ++p) ps.push_back(p);
  run.params = {{"gamma_list", d.gammas}, {"anchor_p", d.anchor_p},
                {"anchor_zeta", d.anchor_zeta}, {"n_years", d.n_years},
                {"p_min", d.p_min}, {"p_max", d.p_max}};
  std::ostringstream csv;
  csv << "curve,p,zeta,bound\n";
  std::vector<double> zeta(ps.size()), bound(ps.size());
  for (const double gamma : d.gammas) {
    check(qb_scaling_curve(gamma, d.anchor_p, d.anchor_zeta, d.n_years, ps.data(), ps.size(),
                           zeta.data(), bound.data()));
    for (std::size_t i = 0; i < ps.size(); ++i) {
      csv << "gamma=" << fmt(gamma) << "," << fmt(ps[i]) << "," << fmt(zeta[i]) << ","
          << fmt(bound[i]) << "\n";
    }
  }
  if (!d.capm.empty()) {
    if (d.capm.size() != 4) throw UsageError("--capm takes alpha,beta,sigma,sigma_m");
    run.params["capm"] = d.capm;
    for (const double p : ps) {
      const std::vector<double> alpha(static_cast<std::size_t>(p), d.capm[0]);
      const std::vector<double> beta(static_cast<std::size_t>(p), d.capm[1]);
      double z2 = 0.0;
      check(qb_capm_snr(alpha.data(), beta.data(), alpha.size(), d.capm[2], d.capm[3], &z2));
      double b = 0.0;
      check(qb_bound(d.n_years, static_cast<int>(p), z2, &b));
      csv << "capm," << fmt(p) << "," << fmt(std::sqrt(z2)) << "," << fmt(b) << "\n";
    }
  }
  run.emit("diversify.csv", csv.str());
}

// ---------------------------------------------------------------- empirical

struct ReturnsTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
};

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan" ||
         cell == "null";
}

std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

ReturnsTable read_returns(const std::string& path, Run& run) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open returns CSV " + path);
  std::string line;
  if (!std::getline(in, line)) throw UsageError(path + ": empty file");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  ReturnsTable t;
  t.names = split_csv_line(line);
  const std::size_t p = t.names.size();
  if (p == 0) throw UsageError(path + ": header has no columns");
  std::vector<std::vector<double>> cols(p);
  std::vector<bool> missing(p, false);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != p) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(p) +
                       " fields, found " + std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < p; ++j) {
      if (is_missing(cells[j])) {
        missing[j] = true;
        cols[j].push_back(std::nan(""));
        continue;
      }
      double v = 0.0;
      const char* b = cells[j].data();
      const char* e = b + cells[j].size();
      auto [ptr, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || ptr != e) {
        throw UsageError(path + ":" + std::to_string(line_no) + ": not a number: '" +
                         cells[j] + "'");
      }
      cols[j].push_back(v);
    }
  }
  ReturnsTable kept;
  for (std::size_t j = 0; j < p; ++j) {
    if (missing[j]) {
      run.warn("dropping asset '" + t.names[j] + "' with missing values");
      continue;
    }
    kept.names.push_back(t.names[j]);
    kept.columns.push_back(std::move(cols[j]));
  }
  if (kept.columns.empty()) throw UsageError(path + ": no asset has a complete history");
  return kept;
}

struct EmpiricalFlags {
  std::string returns_csv;
  double periods_per_year = kDefaultPeriodsPerYear;
  int n_perm = 1000;
  std::string method = "truncated";
  std::uint64_t seed = 0;
};

void cmd_empirical(const EmpiricalFlags& e, Run& run) {
  const ReturnsTable table = read_returns(e.returns_csv, run);
  const std::size_t p = table.columns.size();
  const std::size_t n = table.columns.front().size();
  std::vector<double> data(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) data[i * p + j] = table.columns[j][i];
  }
  run.params = {{"returns_csv", e.returns_csv}, {"periods_per_year", e.periods_per_year},
                {"n_perm", e.n_perm}, {"method", e.method}, {"seed", e.seed},
                {"assets_used", table.names}, {"periods", n}};
  qb_snr_curve* raw = nullptr;
  check(qb_snr_curve_run(data.data(), n, p, e.n_perm,
                         e.method == "unbiased" ? QB_SNR_UNBIASED : QB_SNR_TRUNCATED, e.seed,
                         &raw));
  std::unique_ptr<qb_snr_curve, decltype(&qb_snr_curve_free)> curve(raw, qb_snr_curve_free);
  for (std::size_t i = 0; i < qb_snr_curve_warning_count(curve.get()); ++i) {
    run.warn(qb_snr_curve_warning(curve.get(), i));
  }
  const double root = std::sqrt(e.periods_per_year);
  std::ostringstream csv;
  csv << "p,q25,q50,q75\n";
  for (std::size_t i = 0; i < qb_snr_curve_row_count(curve.get()); ++i) {
    int k = 0;
    double q25 = 0.0, q50 = 0.0, q75 = 0.0;
    check(qb_snr_curve_row(curve.get(), i, &k, &q25, &q50, &q75));
    csv << k << "," << fmt(q25 * root) << "," << fmt(q50 * root) << "," << fmt(q75 * root)
        << "\n";
  }
  run.emit("snr_curve.csv", csv.str());
}

// ---------------------------------------------------------------- driver

int dispatch(std::vector<std::string> args);

std::vector<std::string> replay_args(const std::string& manifest_path,
                                     const std::optional<std::string>& out) {
  std::ifstream in(manifest_path);
  if (!in) throw UsageError("cannot open manifest " + manifest_path);
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw UsageError(manifest_path + ": " + e.what());
  }
  if (!m.contains("args") || !m["args"].is_array()) {
    throw UsageError(manifest_path + ": no recorded arguments");
  }
  std::vector<std::string> args = m["args"].get<std::vector<std::string>>();
  if (out) {
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--out" && i + 1 < args.size()) {
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                   args.begin() + static_cast<std::ptrdiff_t>(i + 2));
        break;
      }
      if (args[i].rfind("--out=", 0) == 0) {
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
    args.push_back("--out");
    args.push_back(*out);
  }
  return args;
}

int dispatch(std::vector<std::string> args) {
  CLI::App app{"Bounds and simulations for the quality of estimated portfolios", "qualbound"};
  app.set_version_flag("--version", std::string(qb_version()));
  app.require_subcommand(1);

  BoundFlags bound;
  auto* c_bound = app.add_subcommand("bound", "Upper bound on expected quality (annual units)");
  c_bound->add_option("--n-years", bound.n_years, "Sample length in years")->required();
  c_bound->add_option("--p", bound.p, "Number of assets")->required();
  c_bound->add_option("--zeta-annual", bound.zeta_annual, "Maximal SNR per sqrt(year)");
  c_bound->add_option("--f", bound.f, "Number of features including the constant");
  auto* o_hedge = c_bound->add_option("--hedge-k", bound.hedge_k, "Number of hedge constraints");
  c_bound->add_option("--delta-zeta-sq", bound.delta_zeta_sq, "SNR gap lost to hedging (annual)");
  auto* o_sub = c_bound->add_option("--subspace-p0", bound.subspace_p0, "Subspace dimension");
  o_hedge->excludes(o_sub);
  c_bound->add_option("--out", bound.out, "Output directory");

  ApproxFlags approx;
  std::string approx_out;
  auto* c_approx = app.add_subcommand("approx", "Approximate law of the Markowitz quality");
  c_approx->add_option("--n-years", approx.n_years, "Sample length in years")->required();
  c_approx->add_option("--p", approx.p, "Number of assets")->required();
  c_approx->add_option("--zeta-annual", approx.zeta_annual, "Maximal SNR per sqrt(year)")
      ->required();
  auto* o_q = c_approx->add_option("--quantiles", approx.quantiles, "Comma-separated levels")
                  ->delimiter(',');
  auto* o_cdf = c_approx->add_option("--cdf-at", approx.cdf_at, "Evaluate the CDF here");
  auto* o_msq = c_approx->add_flag("--mean-sq", approx.mean_sq, "Expected squared quality");
  o_q->excludes(o_cdf)->excludes(o_msq);
  o_cdf->excludes(o_msq);
  c_approx->add_option("--out", approx_out, "Output directory");

  SimulateFlags sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo quality of the estimated portfolio");
  c_sim->add_option("--n-days", sim.n_days, "Observations per replicate")->required();
  c_sim->add_option("--p", sim.p, "Number of assets")->required();
  c_sim->add_option("--zeta-annual", sim.zeta_annual, "Maximal SNR per sqrt(year)")->required();
  c_sim->add_option("--features", sim.features, "Features including the constant");
  auto* o_shedge = c_sim->add_option("--hedge-k", sim.hedge_k, "Hedge out k portfolios");
  auto* o_ssub = c_sim->add_option("--subspace-p0", sim.subspace_p0, "Use the first p0 assets");
  o_shedge->excludes(o_ssub);
  c_sim->add_option("--levels", sim.levels, "Quantile levels")->delimiter(',');
  c_sim->add_flag("--no-ks", sim.no_ks, "Skip the KS distance");
  add_experiment_flags(c_sim, sim.exp);

  SweepFlags sw;
  auto* c_sweep = app.add_subcommand("sweep", "KS distance over an (n, p, zeta) grid");
  c_sweep->add_option("--n-years-list", sw.n_years, "Sample lengths in years")
      ->required()->delimiter(',');
  c_sweep->add_option("--p-list", sw.p, "Asset counts")->required()->delimiter(',');
  c_sweep->add_option("--zeta-list", sw.zeta, "Annual SNRs")->required()->delimiter(',');
  add_experiment_flags(c_sweep, sw.exp);

  DiversifyFlags div;
  std::string div_out;
  auto* c_div = app.add_subcommand("diversify", "Bound as the universe grows");
  c_div->add_option("--gamma-list", div.gammas, "Exponents of zeta ~ p^gamma")->delimiter(',');
  c_div->add_option("--anchor-p", div.anchor_p, "Anchor universe size");
  c_div->add_option("--anchor-zeta", div.anchor_zeta, "Annual SNR at the anchor");
  c_div->add_option("--n-years", div.n_years, "Sample length in years");
  c_div->add_option("--p-min", div.p_min, "Smallest universe");
  c_div->add_option("--p-max", div.p_max, "Largest universe");
  c_div->add_option("--capm", div.capm, "alpha,beta,sigma,sigma_m (annual)")->delimiter(',');
  c_div->add_option("--out", div_out, "Output directory");

  EmpiricalFlags emp;
  std::string emp_out;
  auto* c_emp = app.add_subcommand("empirical", "SNR estimates over random asset orderings");
  c_emp->add_option("--returns-csv", emp.returns_csv, "Per-period simple returns")->required();
  c_emp->add_option("--periods-per-year", emp.periods_per_year, "Observations per year")
      ->check(CLI::PositiveNumber);
  c_emp->add_option("--n-perm", emp.n_perm, "Permutations")->check(CLI::PositiveNumber);
  c_emp->add_option("--method", emp.method, "unbiased or truncated")
      ->check(CLI::IsMember({"unbiased", "truncated"}));
  c_emp->add_option("--seed", emp.seed, "Seed (default: QUALBOUND_SEED or 0)");
  c_emp->add_option("--out", emp_out, "Output directory");

  std::string manifest_path;
  std::optional<std::string> replay_out;
  auto* c_replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  c_replay->add_option("manifest", manifest_path, "manifest.json")->required();
  c_replay->add_option("--out", replay_out, "Write outputs here instead");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (c_replay->parsed()) return dispatch(replay_args(manifest_path, replay_out));

  CLI::App* cmd = app.get_subcommands().front();
  Run run(cmd->get_name(), args);
  auto resolve_seed = [&](std::uint64_t& seed) {
    const bool given = cmd->count("--seed") > 0;
    if (!given) seed = default_seed();
    run.set_seed(seed, given);
  };
  auto set_out = [&](const std::string& out) {
    if (!out.empty()) run.out_dir = fs::path(out);
  };

  if (cmd == c_bound) {
    set_out(bound.out);
    cmd_bound(bound, run);
  } else if (cmd == c_approx) {
    set_out(approx_out);
    cmd_approx(approx, run);
  } else if (cmd == c_sim) {
    set_out(sim.exp.out);
    resolve_seed(sim.exp.seed);
    cmd_simulate(sim, run);
  } else if (cmd == c_sweep) {
    set_out(sw.exp.out);
    resolve_seed(sw.exp.seed);
    cmd_sweep(sw, run);
  } else if (cmd == c_div) {
    set_out(div_out);
    cmd_diversify(div, run);
  } else if (cmd == c_emp) {
    set_out(emp_out);
    resolve_seed(emp.seed);
    cmd_empirical(emp, run);
  }
  run.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const RuntimeFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
