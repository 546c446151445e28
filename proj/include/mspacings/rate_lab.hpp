#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mspacings/gamma_kernel.hpp"
#include "mspacings/gaussian_limits.hpp"
#include "mspacings/parallel.hpp"
#include "mspacings/process_path.hpp"
#include "mspacings/pyke.hpp"
#include "mspacings/rng.hpp"
#include "mspacings/spacings.hpp"
#include "mspacings/stats.hpp"

namespace mspacings {

enum class ExperimentKind {
  rate_RN,
  rate_TN,
  rate_kappa_minus_UN,
  limit_law_alpha,
  limit_law_gamma,
  covariance_check,
  finite_n_law,
};

inline std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
  case ExperimentKind::rate_RN: return "rate_RN";
  case ExperimentKind::rate_TN: return "rate_TN";
  case ExperimentKind::rate_kappa_minus_UN: return "rate_kappa_minus_UN";
  case ExperimentKind::limit_law_alpha: return "limit_law_alpha";
  case ExperimentKind::limit_law_gamma: return "limit_law_gamma";
  case ExperimentKind::covariance_check: return "covariance_check";
  case ExperimentKind::finite_n_law: return "finite_n_law";
  }
  return "unknown";
}

inline std::vector<std::size_t> power_of_two_ladder(int lo_exponent, int hi_exponent) {
  std::vector<std::size_t> ladder;
  for (int k = lo_exponent; k <= hi_exponent; ++k) {
    ladder.push_back(std::size_t{1} << k);
  }
  return ladder;
}

struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::rate_TN;
  int m = 1;
  double a = 0.9;
  std::vector<std::size_t> N_ladder = power_of_two_ladder(7, 13);
  std::size_t replications = 400;
  std::size_t grid_points = 512;
  std::uint64_t seed = 1;

  // Reference replications for limit laws (sup of W* or V*); 0 means
  // "same as replications".
  std::size_t null_replications = 0;
  // Limit-law threshold applies to rungs with N >= this value.
  std::size_t threshold_N = 4096;
  double ks_level = 1e-3;
  double slope_tolerance = 0.1;
  // Simulated W*/V* paths in the covariance check.
  std::size_t limit_paths = 20000;
  std::vector<double> covariance_levels{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> finite_n_points{0.5, 1.0, 2.0};

  // Worker threads; results do not depend on it and it is not reported.
  unsigned workers = 0;

  bool is_rate() const {
    return kind == ExperimentKind::rate_RN || kind == ExperimentKind::rate_TN ||
           kind == ExperimentKind::rate_kappa_minus_UN;
  }

  void validate() const {
    if (m < 1) {
      throw std::invalid_argument("plan: m must be >= 1");
    }
    if (!(a > 0.0 && a <= 1.0)) {
      throw std::invalid_argument("plan: a must lie in (0, 1]");
    }
    if (N_ladder.empty()) {
      throw std::invalid_argument("plan: N ladder is empty");
    }
    for (std::size_t i = 0; i < N_ladder.size(); ++i) {
      if (N_ladder[i] < 1 || (i > 0 && N_ladder[i] <= N_ladder[i - 1])) {
        throw std::invalid_argument("plan: N ladder must be positive and strictly increasing");
      }
    }
    if ((is_rate() || kind == ExperimentKind::limit_law_alpha ||
         kind == ExperimentKind::limit_law_gamma) &&
        N_ladder.size() < 4) {
      throw std::invalid_argument("plan: N ladder needs at least 4 rungs");
    }
    if (replications < 2 || grid_points < 2) {
      throw std::invalid_argument("plan: need replications >= 2 and grid >= 2");
    }
    if (kind == ExperimentKind::finite_n_law && m != 1) {
      throw std::invalid_argument("plan: finite-n law is for simple spacings (m = 1)");
    }
  }
};

struct RungSummary {
  std::size_t N = 0;
  Summary summary;
  double envelope = 0.0;
  std::vector<std::pair<std::string, double>> extra;
};

struct Check {
  std::string name;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool passed = false;
  bool informational = false;
};

inline Check band_check(std::string name, double value, double lower, double upper,
                        bool informational = false) {
  return {std::move(name), value, lower, upper, value >= lower && value <= upper, informational};
}

struct SlopeFit {
  LineFit fit;
  double band_lower = 0.0;
  double band_upper = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
};

struct ExperimentReport {
  ExperimentPlan plan;
  std::vector<RungSummary> rungs;
  std::optional<SlopeFit> slope;
  std::vector<Check> checks;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const Check &c) { return c.informational || c.passed; });
  }
};

inline nlohmann::ordered_json to_json(const ExperimentPlan &plan) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(plan.kind));
  j["m"] = plan.m;
  j["a"] = plan.a;
  j["N_ladder"] = plan.N_ladder;
  j["replications"] = plan.replications;
  j["null_replications"] =
      plan.null_replications == 0 ? plan.replications : plan.null_replications;
  j["grid_points"] = plan.grid_points;
  j["seed"] = plan.seed;
  return j;
}

inline nlohmann::ordered_json to_json(const ExperimentReport &report) {
  nlohmann::ordered_json j;
  j["plan"] = to_json(report.plan);
  j["passed"] = report.passed();
  auto rungs = nlohmann::ordered_json::array();
  for (const auto &r : report.rungs) {
    nlohmann::ordered_json row;
    row["N"] = r.N;
    row["mean"] = r.summary.mean;
    row["median"] = r.summary.median;
    row["std_error"] = r.summary.std_error;
    row["envelope"] = r.envelope;
    for (const auto &[key, value] : r.extra) {
      row[key] = value;
    }
    rungs.push_back(std::move(row));
  }
  j["rungs"] = std::move(rungs);
  if (report.slope) {
    const auto &s = *report.slope;
    j["slope"] = {{"slope", s.fit.slope},
                  {"intercept", s.fit.intercept},
                  {"slope_std_error", s.fit.slope_std_error},
                  {"band", {s.band_lower, s.band_upper}},
                  {"target", s.target},
                  {"tolerance", s.tolerance}};
  }
  auto checks = nlohmann::ordered_json::array();
  for (const auto &c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"lower", c.lower},
                      {"upper", c.upper},
                      {"passed", c.passed},
                      {"informational", c.informational}});
  }
  j["checks"] = std::move(checks);
  j["details"] = report.details;
  return j;
}

// Per-rung table when the experiment has rungs, otherwise the check list.
inline std::string to_csv(const ExperimentReport &report) {
  std::string out;
  if (!report.rungs.empty()) {
    out = "N,mean,median,std_error,envelope";
    for (const auto &[key, value] : report.rungs.front().extra) {
      out += "," + key;
    }
    out += '\n';
    for (const auto &r : report.rungs) {
      out += std::to_string(r.N) + ',' + format_double(r.summary.mean) + ',' +
             format_double(r.summary.median) + ',' + format_double(r.summary.std_error) + ',' +
             format_double(r.envelope);
      for (const auto &[key, value] : r.extra) {
        out += ',' + format_double(value);
      }
      out += '\n';
    }
    return out;
  }
  out = "name,value,lower,upper,passed,informational\n";
  for (const auto &c : report.checks) {
    out += c.name + ',' + format_double(c.value) + ',' + format_double(c.lower) + ',' +
           format_double(c.upper) + ',' + (c.passed ? "1" : "0") + ',' +
           (c.informational ? "1" : "0") + '\n';
  }
  return out;
}

namespace detail {

enum StreamTag : std::uint64_t {
  kTagTN = 1,
  kTagRN = 2,
  kTagKappa = 3,
  kTagLimitAlpha = 4,
  kTagLimitGamma = 5,
  kTagNull = 6,
  kTagCovariance = 7,
  kTagLimitCovariance = 8,
  kTagFiniteN = 9,
};

template <class Stat>
std::vector<double> replicate(const ExperimentPlan &plan, std::uint64_t tag, std::size_t rung,
                              std::size_t count, Stat &&stat) {
  std::vector<double> out(count);
  parallel_for(count, plan.workers, [&](std::size_t r) {
    RngStream rng(plan.seed, stream_id(tag, rung, r));
    out[r] = stat(rng);
  });
  return out;
}

inline void fit_slope(ExperimentReport &report, double target) {
  std::vector<double> x, y, w;
  for (const auto &r : report.rungs) {
    if (!(r.summary.mean > 0) || !(r.summary.std_error > 0)) {
      throw std::runtime_error("rate regression: degenerate rung statistic at N = " +
                               std::to_string(r.N));
    }
    const double rel = r.summary.std_error / r.summary.mean;
    x.push_back(std::log(static_cast<double>(r.N)));
    y.push_back(std::log(r.summary.mean));
    w.push_back(1.0 / (rel * rel));
  }
  SlopeFit s;
  s.fit = weighted_line_fit(x, y, w);
  s.band_lower = s.fit.slope - 1.96 * s.fit.slope_std_error;
  s.band_upper = s.fit.slope + 1.96 * s.fit.slope_std_error;
  s.target = target;
  s.tolerance = report.plan.slope_tolerance;
  report.checks.push_back(band_check("slope_within_tolerance", s.fit.slope, target - s.tolerance,
                                     target + s.tolerance));
  report.checks.push_back(
      band_check("slope_inside_confidence_band", s.fit.slope, s.band_lower, s.band_upper));
  report.slope = s;
}

} // namespace detail

// sup_{0 <= x <= x_max} |F(c x) - F(x)|. The difference has a single
// critical point at x* = m log(c) / (c - 1), so the supremum is attained at
// min(x_max, x*).
inline double rescaling_sup(const GammaKernel &kernel, double c, double x_max) {
  if (!(c > 0)) {
    throw std::invalid_argument("rescaling_sup: scale must be positive");
  }
  if (c == 1.0) {
    return 0.0;
  }
  const double u = c - 1.0;
  const double critical = static_cast<double>(kernel.m()) * std::log1p(u) / u;
  const double x = std::min(x_max, critical);
  return std::abs(kernel.cdf(c * x) - kernel.cdf(x));
}

// |T_N / (mN) - 1| across the N ladder; slope target -1/2.
inline ExperimentReport run_rate_TN(const ExperimentPlan &plan) {
  plan.validate();
  ExperimentReport report{plan, {}, {}, {}, {}};
  for (std::size_t k = 0; k < plan.N_ladder.size(); ++k) {
    const std::size_t N = plan.N_ladder[k];
    const double mn = static_cast<double>(plan.m) * static_cast<double>(N);
    const auto stats = detail::replicate(plan, detail::kTagTN, k, plan.replications,
                                         [&](RngStream &rng) {
                                           const auto y = sample_block_sums(N, plan.m, rng);
                                           return std::abs(compensated_sum(y) / mn - 1.0);
                                         });
    const double aN = plan.a * static_cast<double>(N);
    report.rungs.push_back({N, summarize(stats),
                            std::sqrt(log_plus(aN) / static_cast<double>(N)), {}});
  }
  detail::fit_slope(report, -0.5);
  return report;
}

// sup_{x <= Q(a)} |F(x T_N / (mN)) - F(x)|; slope target -1/2.
inline ExperimentReport run_rate_RN(const ExperimentPlan &plan) {
  plan.validate();
  const GammaKernel kernel(plan.m);
  const double x_max = kernel.quantile(clamp_domain_cutoff(plan.a));
  ExperimentReport report{plan, {}, {}, {}, {}};
  for (std::size_t k = 0; k < plan.N_ladder.size(); ++k) {
    const std::size_t N = plan.N_ladder[k];
    const double mn = static_cast<double>(plan.m) * static_cast<double>(N);
    const auto stats = detail::replicate(
        plan, detail::kTagRN, k, plan.replications, [&](RngStream &rng) {
          const auto y = sample_block_sums(N, plan.m, rng);
          return rescaling_sup(kernel, compensated_sum(y) / mn, x_max);
        });
    const double aN = plan.a * static_cast<double>(N);
    report.rungs.push_back({N, summarize(stats),
                            std::sqrt(log_plus(aN) / static_cast<double>(N)), {}});
  }
  detail::fit_slope(report, -0.5);
  return report;
}

// sup over [C_N, a - C_N] of |kappa_N(t) - U_N(t)| with C_N = N^{-1/2}, both
// processes built from one gamma sample.
inline double kappa_minus_uniform_sup(const GammaSample &sample, const QuantileGrid &grid,
                                      const GammaKernel &kernel) {
  const double root_n = std::sqrt(static_cast<double>(sample.size()));
  double sup = 0.0;
  for (std::size_t j = 0; j < grid.t.size(); ++j) {
    const double k = sample.K(grid.t[j]);
    const double kappa = root_n * grid.density[j] * (grid.quantile[j] - k);
    const double uniform = root_n * (grid.t[j] - kernel.cdf(k));
    sup = std::max(sup, std::abs(kappa - uniform));
  }
  return sup;
}

inline std::vector<double> kappa_window(double a, std::size_t N, std::size_t points) {
  const double c = 1.0 / std::sqrt(static_cast<double>(N));
  const double hi = clamp_domain_cutoff(a) - c;
  if (!(hi > c)) {
    throw std::invalid_argument("kappa window [C_N, a - C_N] is empty at N = " +
                                std::to_string(N));
  }
  return linear_grid(c, hi, points);
}

// Slope target -1/4. The grid-doubling check at the top rung is reported
// as informational.
inline ExperimentReport run_rate_kappa_minus_UN(const ExperimentPlan &plan) {
  plan.validate();
  const GammaKernel kernel(plan.m);
  ExperimentReport report{plan, {}, {}, {}, {}};
  auto rung_stats = [&](std::size_t k, std::size_t points) {
    const std::size_t N = plan.N_ladder[k];
    const QuantileGrid grid = make_quantile_grid(kernel, kappa_window(plan.a, N, points));
    return detail::replicate(plan, detail::kTagKappa, k, plan.replications, [&](RngStream &rng) {
      return kappa_minus_uniform_sup(GammaSample(sample_block_sums(N, plan.m, rng)), grid, kernel);
    });
  };
  for (std::size_t k = 0; k < plan.N_ladder.size(); ++k) {
    const std::size_t N = plan.N_ladder[k];
    const double aN = plan.a * static_cast<double>(N);
    report.rungs.push_back({N, summarize(rung_stats(k, plan.grid_points)),
                            std::pow(static_cast<double>(N), -0.25) * std::pow(log_plus(aN), 0.75),
                            {}});
  }
  detail::fit_slope(report, -0.25);

  const std::size_t top = plan.N_ladder.size() - 1;
  const double coarse = report.rungs[top].summary.mean;
  const double fine = summarize(rung_stats(top, 2 * plan.grid_points - 1)).mean;
  report.checks.push_back(
      band_check("grid_doubling_relative_change", std::abs(fine - coarse) / coarse, 0.0, 0.02,
                 true));
  return report;
}

// sup_{x <= Q(a)} |alpha_n(x)| from one uniform sample of size n = mN.
inline double sup_alpha(std::size_t N, int m, const CdfGrid &grid, RngStream &rng) {
  const auto sample = SortedUniformSample::draw(static_cast<std::size_t>(m) * N, rng);
  return alpha_process(compute_spacings(sample, m), grid).sup_abs();
}

// sup_{t <= a} |gamma_n(t)| from one uniform sample of size n = mN.
inline double sup_gamma(std::size_t N, int m, const QuantileGrid &grid, RngStream &rng) {
  const auto sample = SortedUniformSample::draw(static_cast<std::size_t>(m) * N, rng);
  return gamma_process(order_spacings(compute_spacings(sample, m)), grid).sup_abs();
}

// Two-sample KS distance between sup|alpha_n| (or sup|gamma_n|) and the sup
// of the matching limit process, per rung of the ladder.
inline ExperimentReport run_limit_law(const ExperimentPlan &plan) {
  plan.validate();
  const bool empirical_side = plan.kind == ExperimentKind::limit_law_alpha;
  if (!empirical_side && plan.kind != ExperimentKind::limit_law_gamma) {
    throw std::invalid_argument("run_limit_law: plan kind must be a limit law");
  }
  const GammaKernel kernel(plan.m);
  const std::vector<double> x_grid = default_x_grid(kernel, plan.a, plan.grid_points);
  const std::vector<double> t_grid = default_t_grid(plan.a, plan.grid_points);
  const CdfGrid cdf_grid = make_cdf_grid(kernel, x_grid);
  const QuantileGrid quantile_grid = make_quantile_grid(kernel, t_grid);

  const std::size_t null_reps =
      plan.null_replications == 0 ? plan.replications : plan.null_replications;
  const LimitModel model = empirical_side ? LimitModel(kernel, {}, x_grid)
                                          : LimitModel(kernel, t_grid, {});
  const auto null_sups = detail::replicate(plan, detail::kTagNull, 0, null_reps,
                                           [&](RngStream &rng) {
                                             const JointBridge b = model.simulate(rng);
                                             return empirical_side ? model.limit_V(b).sup_abs()
                                                                   : model.limit_W(b).sup_abs();
                                           });
  const double critical = ks_two_sample_critical(plan.replications, null_reps, plan.ks_level);

  ExperimentReport report{plan, {}, {}, {}, {}};
  std::vector<double> distances;
  for (std::size_t k = 0; k < plan.N_ladder.size(); ++k) {
    const std::size_t N = plan.N_ladder[k];
    const auto sups = detail::replicate(
        plan, empirical_side ? detail::kTagLimitAlpha : detail::kTagLimitGamma, k,
        plan.replications, [&](RngStream &rng) {
          return empirical_side ? sup_alpha(N, plan.m, cdf_grid, rng)
                                : sup_gamma(N, plan.m, quantile_grid, rng);
        });
    const double ks = ks_two_sample(sups, null_sups);
    distances.push_back(ks);
    const double aN = plan.a * static_cast<double>(N);
    const double envelope = empirical_side
                                ? log_plus(aN) / std::sqrt(static_cast<double>(N))
                                : std::pow(static_cast<double>(N), -0.25) *
                                      std::pow(log_plus(aN), 0.75);
    report.rungs.push_back({N, summarize(sups), envelope, {{"ks_distance", ks}, {"ks_critical", critical}}});
    if (N >= plan.threshold_N) {
      report.checks.push_back(
          band_check("ks_below_critical_N" + std::to_string(N), ks, 0.0, critical));
    }
  }

  // Trend: the mean distance over the upper half of the ladder must not
  // exceed the lower-half mean by more than two standard errors of the
  // difference (estimated from the spread within each half). Once every rung
  // sits at the Monte Carlo noise floor a raw comparison is a coin flip, so
  // the raw comparisons are reported without gating.
  const std::size_t half = distances.size() / 2;
  const auto lower = summarize(std::span<const double>(distances).first(half));
  const auto upper = summarize(std::span<const double>(distances).last(half));
  const double diff_se = std::hypot(lower.std_error, upper.std_error);
  report.checks.push_back(
      band_check("ks_trend_upper_half_mean", upper.mean, 0.0, lower.mean + 2.0 * diff_se));
  report.checks.push_back(
      band_check("ks_trend_upper_half_mean_strict", upper.mean, 0.0, lower.mean, true));
  report.checks.push_back(
      band_check("ks_last_not_above_first", distances.back(), 0.0, distances.front(), true));
  report.details["null_sup_summary"] = {{"mean", summarize(null_sups).mean},
                                        {"replications", null_reps}};
  return report;
}

struct CovarianceCell {
  double u = 0.0;  // abscissa (x for the empirical side, t for the quantile side)
  double v = 0.0;
  double level_u = 0.0;  // probability level behind the abscissa
  double level_v = 0.0;
  double closed_form = 0.0;
  CovarianceEstimate estimate;

  double deviation() const { return std::abs(estimate.value - closed_form); }
  bool within(double se_multiple) const {
    return deviation() <= se_multiple * estimate.std_error;
  }
};

// Monte Carlo covariance between every pair of columns (upper triangle).
template <class ClosedForm>
std::vector<CovarianceCell>
covariance_cells(const std::vector<std::vector<double>> &columns, std::span<const double> abscissae,
                 std::span<const double> levels, ClosedForm &&closed_form) {
  std::vector<CovarianceCell> cells;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    for (std::size_t j = i; j < columns.size(); ++j) {
      CovarianceCell c;
      c.u = abscissae[i];
      c.v = abscissae[j];
      c.level_u = levels[i];
      c.level_v = levels[j];
      c.closed_form = closed_form(c.u, c.v);
      c.estimate = sample_covariance(columns[i], columns[j]);
      cells.push_back(c);
    }
  }
  return cells;
}

inline nlohmann::ordered_json to_json(const std::vector<CovarianceCell> &cells) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto &c : cells) {
    arr.push_back({{"u", c.u},
                   {"v", c.v},
                   {"level_u", c.level_u},
                   {"level_v", c.level_v},
                   {"closed_form", c.closed_form},
                   {"estimate", c.estimate.value},
                   {"std_error", c.estimate.std_error}});
  }
  return arr;
}

struct LimitCovarianceResult {
  std::vector<CovarianceCell> W;
  std::vector<CovarianceCell> V;
  std::vector<double> integrals;  // I = int B(F) per path
};

// Simulated W*(t) and V*(x) at t = levels, x = Q(levels), against the
// closed-form covariances.
inline LimitCovarianceResult check_limit_covariances(const GammaKernel &kernel,
                                                     std::span<const double> levels,
                                                     std::size_t paths, std::uint64_t seed,
                                                     unsigned workers,
                                                     std::size_t quadrature_resolution = 2048) {
  std::vector<double> t(levels.begin(), levels.end());
  std::vector<double> x;
  for (double p : levels) {
    x.push_back(kernel.quantile(p));
  }
  const LimitModel model(kernel, t, x, quadrature_resolution);
  std::vector<std::vector<double>> w_rows(paths), v_rows(paths);
  std::vector<double> integrals(paths);
  parallel_for(paths, workers, [&](std::size_t r) {
    RngStream rng(seed, stream_id(detail::kTagLimitCovariance, 0, r));
    const JointBridge b = model.simulate(rng);
    w_rows[r] = model.limit_W(b).values;
    v_rows[r] = model.limit_V(b).values;
    integrals[r] = b.integral;
  });
  std::vector<std::vector<double>> w_cols(levels.size(), std::vector<double>(paths));
  std::vector<std::vector<double>> v_cols(levels.size(), std::vector<double>(paths));
  for (std::size_t r = 0; r < paths; ++r) {
    for (std::size_t j = 0; j < levels.size(); ++j) {
      w_cols[j][r] = w_rows[r][j];
      v_cols[j][r] = v_rows[r][j];
    }
  }
  LimitCovarianceResult result;
  result.W = covariance_cells(w_cols, t, levels,
                              [&](double a, double b) { return covariance_W(kernel, a, b); });
  result.V = covariance_cells(v_cols, x, levels,
                              [&](double a, double b) { return covariance_V(kernel, a, b); });
  result.integrals = std::move(integrals);
  return result;
}

struct SampleCovarianceResult {
  std::vector<CovarianceCell> alpha;
  std::vector<CovarianceCell> gamma;
};

// alpha_n at x = Q(levels) and gamma_n at t = levels across replications of
// uniform samples of size n = mN.
inline SampleCovarianceResult check_sample_covariances(const GammaKernel &kernel, std::size_t N,
                                                       std::span<const double> levels,
                                                       std::size_t replications,
                                                       std::uint64_t seed, unsigned workers) {
  std::vector<double> t(levels.begin(), levels.end());
  std::vector<double> x;
  for (double p : levels) {
    x.push_back(kernel.quantile(p));
  }
  const CdfGrid cdf_grid = make_cdf_grid(kernel, x);
  const QuantileGrid quantile_grid = make_quantile_grid(kernel, t);
  const int m = kernel.m();
  std::vector<std::vector<double>> a_rows(replications), g_rows(replications);
  parallel_for(replications, workers, [&](std::size_t r) {
    RngStream rng(seed, stream_id(detail::kTagCovariance, 0, r));
    const auto sample = SortedUniformSample::draw(static_cast<std::size_t>(m) * N, rng);
    const SpacingsSet set = compute_spacings(sample, m);
    a_rows[r] = alpha_process(set, cdf_grid).values;
    g_rows[r] = gamma_process(order_spacings(set), quantile_grid).values;
  });
  std::vector<std::vector<double>> a_cols(levels.size(), std::vector<double>(replications));
  std::vector<std::vector<double>> g_cols(levels.size(), std::vector<double>(replications));
  for (std::size_t r = 0; r < replications; ++r) {
    for (std::size_t j = 0; j < levels.size(); ++j) {
      a_cols[j][r] = a_rows[r][j];
      g_cols[j][r] = g_rows[r][j];
    }
  }
  return {covariance_cells(a_cols, x, levels,
                           [&](double a, double b) { return covariance_V(kernel, a, b); }),
          covariance_cells(g_cols, t, levels,
                           [&](double a, double b) { return covariance_W(kernel, a, b); })};
}

inline std::string cell_name(const char *prefix, const CovarianceCell &c) {
  return std::string(prefix) + "[" + format_double(c.level_u) + "," + format_double(c.level_v) +
         "]";
}

// Empirical covariances of alpha_n and gamma_n at N = last ladder rung, and
// of simulated V* and W*, against the closed forms; each cell must lie
// within 3 standard errors.
inline ExperimentReport run_covariance_check(const ExperimentPlan &plan) {
  plan.validate();
  if (plan.kind != ExperimentKind::covariance_check) {
    throw std::invalid_argument("run_covariance_check: plan kind must be covariance_check");
  }
  const GammaKernel kernel(plan.m);
  const std::size_t N = plan.N_ladder.back();
  const auto sample = check_sample_covariances(kernel, N, plan.covariance_levels,
                                               plan.replications, plan.seed, plan.workers);
  const auto limit = check_limit_covariances(kernel, plan.covariance_levels, plan.limit_paths,
                                             plan.seed, plan.workers);
  ExperimentReport report{plan, {}, {}, {}, {}};
  const auto add = [&](const char *prefix, const std::vector<CovarianceCell> &cells) {
    for (const auto &c : cells) {
      report.checks.push_back(band_check(cell_name(prefix, c), c.estimate.value,
                                         c.closed_form - 3.0 * c.estimate.std_error,
                                         c.closed_form + 3.0 * c.estimate.std_error));
    }
  };
  add("alpha_vs_covariance_V", sample.alpha);
  add("gamma_vs_covariance_W", sample.gamma);
  add("limit_V_vs_covariance_V", limit.V);
  add("limit_W_vs_covariance_W", limit.W);
  report.details["N"] = N;
  report.details["limit_paths"] = plan.limit_paths;
  report.details["alpha"] = to_json(sample.alpha);
  report.details["gamma"] = to_json(sample.gamma);
  report.details["limit_V"] = to_json(limit.V);
  report.details["limit_W"] = to_json(limit.W);
  return report;
}

// P(n D_{i,n} <= t) = 1 - (1 - t/n)^{n-1} for simple spacings.
inline double finite_n_spacing_cdf(std::size_t n, double t) {
  if (t <= 0) {
    return 0.0;
  }
  const double nn = static_cast<double>(n);
  if (t >= nn) {
    return 1.0;
  }
  return 1.0 - std::pow(1.0 - t / nn, nn - 1.0);
}

// Empirical frequencies of {n D_{i,n} <= t} for i = 1 and i = n against the
// exact finite-n law, with 3 binomial standard errors. The ladder holds the
// sample sizes n.
inline ExperimentReport run_finite_n_law(const ExperimentPlan &plan) {
  plan.validate();
  ExperimentReport report{plan, {}, {}, {}, {}};
  auto table = nlohmann::ordered_json::array();
  const double reps = static_cast<double>(plan.replications);
  for (std::size_t k = 0; k < plan.N_ladder.size(); ++k) {
    const std::size_t n = plan.N_ladder[k];
    if (n < 2) {
      throw std::invalid_argument("run_finite_n_law: sample sizes must be >= 2");
    }
    std::vector<double> first(plan.replications), last(plan.replications);
    parallel_for(plan.replications, plan.workers, [&](std::size_t r) {
      RngStream rng(plan.seed, stream_id(detail::kTagFiniteN, k, r));
      const SpacingsSet set = compute_spacings(SortedUniformSample::draw(n, rng), 1);
      first[r] = static_cast<double>(n) * set.spacings.front();
      last[r] = static_cast<double>(n) * set.spacings.back();
    });
    report.rungs.push_back({n, summarize(first), 0.0, {}});
    for (double t : plan.finite_n_points) {
      const double exact = finite_n_spacing_cdf(n, t);
      const double se = std::sqrt(exact * (1.0 - exact) / reps);
      const auto freq = [&](const std::vector<double> &v) {
        return static_cast<double>(std::count_if(v.begin(), v.end(),
                                                 [&](double z) { return z <= t; })) /
               reps;
      };
      const double f1 = freq(first);
      const double fn = freq(last);
      const std::string tag = "_n" + std::to_string(n) + "_t" + format_double(t);
      report.checks.push_back(band_check("first_spacing" + tag, f1, exact - 3 * se, exact + 3 * se));
      report.checks.push_back(band_check("last_spacing" + tag, fn, exact - 3 * se, exact + 3 * se));
      // Exchangeable spacings correlate at about -1/(n-1).
      const double diff_se =
          std::sqrt(2.0 * exact * (1.0 - exact) * (1.0 + 1.0 / (static_cast<double>(n) - 1.0)) /
                    reps);
      report.checks.push_back(band_check("index_independence" + tag, f1 - fn, -3 * diff_se, 3 * diff_se));
      table.push_back({{"n", n},
                       {"t", t},
                       {"exact", exact},
                       {"limit", 1.0 - std::exp(-t)},
                       {"first_frequency", f1},
                       {"last_frequency", fn},
                       {"binomial_se", se}});
    }
    const std::size_t zero_hits = static_cast<std::size_t>(
        std::count_if(first.begin(), first.end(), [](double z) { return z <= 0.0; }));
    report.checks.push_back(band_check("zero_point_n" + std::to_string(n),
                                       static_cast<double>(zero_hits), 0.0, 0.0));
  }
  report.details["table"] = std::move(table);
  return report;
}

inline ExperimentReport run_experiment(const ExperimentPlan &plan) {
  switch (plan.kind) {
  case ExperimentKind::rate_RN: return run_rate_RN(plan);
  case ExperimentKind::rate_TN: return run_rate_TN(plan);
  case ExperimentKind::rate_kappa_minus_UN: return run_rate_kappa_minus_UN(plan);
  case ExperimentKind::limit_law_alpha:
  case ExperimentKind::limit_law_gamma: return run_limit_law(plan);
  case ExperimentKind::covariance_check: return run_covariance_check(plan);
  case ExperimentKind::finite_n_law: return run_finite_n_law(plan);
  }
  throw std::invalid_argument("run_experiment: unknown kind");
}

} // namespace mspacings
