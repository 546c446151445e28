#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mspacings/gamma_kernel.hpp"
#include "mspacings/process_path.hpp"
#include "mspacings/rng.hpp"
#include "mspacings/stats.hpp"

namespace mspacings {

// Largest probability used for grids when the caller asks for a = 1; the
// quantile diverges at 1.
inline constexpr double kMaxGridProbability = 1.0 - 1e-6;

// Order statistics U_{0,n} = 0 <= U_{1,n} <= ... <= U_{n,n} = 1 of n - 1
// interior points with the endpoints adjoined.
class SortedUniformSample {
public:
  static SortedUniformSample from_interior(std::vector<double> interior) {
    for (double u : interior) {
      if (!(u >= 0.0 && u <= 1.0)) {
        throw std::invalid_argument("SortedUniformSample: values must lie in [0, 1]");
      }
    }
    std::sort(interior.begin(), interior.end());
    SortedUniformSample s;
    s.values_.reserve(interior.size() + 2);
    s.values_.push_back(0.0);
    s.values_.insert(s.values_.end(), interior.begin(), interior.end());
    s.values_.push_back(1.0);
    return s;
  }

  // n - 1 independent uniforms, sorted, with 0 and 1 adjoined.
  static SortedUniformSample draw(std::size_t n, RngStream &rng) {
    if (n < 1) {
      throw std::invalid_argument("SortedUniformSample: n must be >= 1");
    }
    std::vector<double> interior(n - 1);
    for (double &u : interior) {
      u = rng.uniform();
    }
    return from_interior(std::move(interior));
  }

  std::size_t n() const { return values_.size() - 1; }
  std::span<const double> values() const { return values_; }

private:
  SortedUniformSample() = default;
  std::vector<double> values_;
};

// The N = floor(n / m) non-overlapping m-spacings of a sample; the last one
// absorbs the tail 1 - U_{(N-1)m,n}.
struct SpacingsSet {
  int m = 1;
  std::size_t n = 0;
  std::size_t N = 0;
  std::vector<double> spacings;

  // m N D_i, whose law tends to the order-m gamma law.
  double normalized(std::size_t i) const {
    return static_cast<double>(static_cast<std::size_t>(m) * N) * spacings[i];
  }
};

struct OrderedSpacings {
  int m = 1;
  std::size_t n = 0;
  std::size_t N = 0;
  std::vector<double> sorted;
};

inline SpacingsSet compute_spacings(const SortedUniformSample &sample, int m) {
  if (m < 1) {
    throw std::invalid_argument("compute_spacings: m must be >= 1");
  }
  const std::size_t n = sample.n();
  const auto order = static_cast<std::size_t>(m);
  if (n < order) {
    throw std::invalid_argument("compute_spacings: need n >= m");
  }
  const auto u = sample.values();
  SpacingsSet set;
  set.m = m;
  set.n = n;
  set.N = n / order;
  set.spacings.resize(set.N);
  for (std::size_t i = 1; i < set.N; ++i) {
    set.spacings[i - 1] = u[i * order] - u[(i - 1) * order];
  }
  set.spacings[set.N - 1] = 1.0 - u[(set.N - 1) * order];
  return set;
}

inline OrderedSpacings order_spacings(const SpacingsSet &set) {
  OrderedSpacings ordered{set.m, set.n, set.N, set.spacings};
  std::sort(ordered.sorted.begin(), ordered.sorted.end());
  return ordered;
}

// Fraction of normalized spacings m N D_i that are <= x.
inline double empirical_cdf_of_normalized(const SpacingsSet &set, double x) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < set.N; ++i) {
    if (set.normalized(i) <= x) {
      ++count;
    }
  }
  return static_cast<double>(count) / static_cast<double>(set.N);
}

// Cell index i in [1, N] with (i - 1) / N < t <= i / N, for t in (0, 1].
// The comparisons use the same double expressions as grids built from i / N.
inline std::size_t quantile_cell(double t, std::size_t N) {
  const double n = static_cast<double>(N);
  auto i = static_cast<std::size_t>(std::ceil(t * n));
  i = std::clamp<std::size_t>(i, 1, N);
  while (i > 1 && t <= static_cast<double>(i - 1) / n) {
    --i;
  }
  while (i < N && t > static_cast<double>(i) / n) {
    ++i;
  }
  return i;
}

// Kernel quantities on a fixed t-grid, computed once and shared across
// replications.
struct QuantileGrid {
  std::vector<double> t;
  std::vector<double> quantile;
  std::vector<double> density;  // f(Q(t))
};

inline QuantileGrid make_quantile_grid(const GammaKernel &kernel, std::span<const double> t_grid) {
  QuantileGrid g;
  g.t.assign(t_grid.begin(), t_grid.end());
  g.quantile.resize(g.t.size());
  g.density.resize(g.t.size());
  for (std::size_t j = 0; j < g.t.size(); ++j) {
    if (!(g.t[j] >= 0.0 && g.t[j] < 1.0)) {
      throw std::domain_error("quantile grid: points must lie in [0, 1)");
    }
    g.quantile[j] = kernel.quantile(g.t[j]);
    g.density[j] = kernel.pdf(g.quantile[j]);
  }
  return g;
}

struct CdfGrid {
  std::vector<double> x;
  std::vector<double> cdf;
};

inline CdfGrid make_cdf_grid(const GammaKernel &kernel, std::span<const double> x_grid) {
  CdfGrid g;
  g.x.assign(x_grid.begin(), x_grid.end());
  g.cdf.resize(g.x.size());
  for (std::size_t j = 0; j < g.x.size(); ++j) {
    g.cdf[j] = kernel.cdf(g.x[j]);
  }
  return g;
}

inline double clamp_domain_cutoff(double a) {
  if (!(a > 0.0 && a <= 1.0)) {
    throw std::invalid_argument("domain cutoff a must lie in (0, 1]");
  }
  return std::min(a, kMaxGridProbability);
}

// Equispaced points on [0, Q(a)].
inline std::vector<double> default_x_grid(const GammaKernel &kernel, double a,
                                          std::size_t points = 512) {
  return linear_grid(0.0, kernel.quantile(clamp_domain_cutoff(a)), points);
}

// Equispaced points on [0, a].
inline std::vector<double> default_t_grid(double a, std::size_t points = 512) {
  return linear_grid(0.0, clamp_domain_cutoff(a), points);
}

inline ProcessPath alpha_process(const SpacingsSet &set, const CdfGrid &grid) {
  std::vector<double> normalized(set.N);
  for (std::size_t i = 0; i < set.N; ++i) {
    normalized[i] = set.normalized(i);
  }
  std::sort(normalized.begin(), normalized.end());
  const double N = static_cast<double>(set.N);
  const double root_n = std::sqrt(N);

  ProcessPath path{PathKind::alpha, set.m, set.n, set.N, grid.x, {}};
  path.values.resize(grid.x.size());
  for (std::size_t j = 0; j < grid.x.size(); ++j) {
    const auto count = std::upper_bound(normalized.begin(), normalized.end(), grid.x[j]) -
                       normalized.begin();
    path.values[j] = root_n * (static_cast<double>(count) / N - grid.cdf[j]);
  }
  return path;
}

// alpha_n(x) = sqrt(N) (F_hat_n(x) - F(x)) on a caller-supplied x-grid.
inline ProcessPath alpha_process(const SpacingsSet &set, std::span<const double> grid,
                                 const GammaKernel &kernel) {
  if (kernel.m() != set.m) {
    throw std::invalid_argument("alpha_process: kernel order differs from spacings order");
  }
  return alpha_process(set, make_cdf_grid(kernel, grid));
}

// Q_hat_n(t): m N M_{i:n} on ((i - 1)/N, i/N], and 0 at t = 0.
inline double quantile_spacings_function(const OrderedSpacings &ordered, double t, int m,
                                         std::size_t N) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::domain_error("quantile_spacings_function: t must lie in [0, 1]");
  }
  if (N != ordered.sorted.size() || N == 0) {
    throw std::invalid_argument("quantile_spacings_function: N does not match the spacings");
  }
  if (t == 0.0) {
    return 0.0;
  }
  return static_cast<double>(static_cast<std::size_t>(m) * N) *
         ordered.sorted[quantile_cell(t, N) - 1];
}

inline ProcessPath gamma_process(const OrderedSpacings &ordered, const QuantileGrid &grid) {
  const double root_n = std::sqrt(static_cast<double>(ordered.N));
  ProcessPath path{PathKind::gamma, ordered.m, ordered.n, ordered.N, grid.t, {}};
  path.values.resize(grid.t.size());
  for (std::size_t j = 0; j < grid.t.size(); ++j) {
    const double q_hat = quantile_spacings_function(ordered, grid.t[j], ordered.m, ordered.N);
    path.values[j] = root_n * grid.density[j] * (grid.quantile[j] - q_hat);
  }
  return path;
}

// gamma_n(t) = sqrt(N) f(Q(t)) (Q(t) - Q_hat_n(t)) on a t-grid inside [0, 1).
inline ProcessPath gamma_process(const OrderedSpacings &ordered, std::span<const double> grid,
                                 const GammaKernel &kernel) {
  if (kernel.m() != ordered.m) {
    throw std::invalid_argument("gamma_process: kernel order differs from spacings order");
  }
  return gamma_process(ordered, make_quantile_grid(kernel, grid));
}

} // namespace mspacings
