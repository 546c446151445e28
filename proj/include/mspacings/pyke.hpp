#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <stdexcept>
#include <vector>

#include "mspacings/gamma_kernel.hpp"
#include "mspacings/process_path.hpp"
#include "mspacings/rng.hpp"
#include "mspacings/spacings.hpp"
#include "mspacings/stats.hpp"

namespace mspacings {

// Unit exponentials E_1..E_n grouped into N = floor(n/m) blocks of m.
//
// Y_i sums block i, T_N sums the full blocks, and the n - mN leftover
// exponentials form the tail. Uniform m-spacings have the law of the block
// sums over S_n, with the tail folded into the last spacing.
struct ExponentialBlock {
  int m = 1;
  std::size_t n = 0;
  std::size_t N = 0;
  std::vector<double> exponentials;
  double partial_sum = 0.0;  // S_n
  std::vector<double> block_sums;  // Y_1..Y_N
  double total = 0.0;  // T_N
  double tail_sum = 0.0;

  bool exact_multiple() const { return n == static_cast<std::size_t>(m) * N; }

  static ExponentialBlock from_exponentials(std::vector<double> e, int m) {
    if (m < 1 || e.size() < static_cast<std::size_t>(m)) {
      throw std::invalid_argument("ExponentialBlock: need m >= 1 and n >= m");
    }
    for (double x : e) {
      if (!(x > 0) || !std::isfinite(x)) {
        throw std::invalid_argument("ExponentialBlock: exponentials must be positive and finite");
      }
    }
    const auto order = static_cast<std::size_t>(m);
    ExponentialBlock b;
    b.m = m;
    b.n = e.size();
    b.N = b.n / order;
    b.block_sums.resize(b.N);
    for (std::size_t i = 0; i < b.N; ++i) {
      b.block_sums[i] = compensated_sum(std::span<const double>(e).subspan(i * order, order));
    }
    b.total = compensated_sum(b.block_sums);
    b.tail_sum = compensated_sum(std::span<const double>(e).subspan(b.N * order));
    b.partial_sum = compensated_sum(e);
    b.exponentials = std::move(e);
    return b;
  }

  // A synthetic block with prescribed block sums Y_i; each Y_i is split into
  // m equal exponentials. Optional tail exponentials follow the full blocks.
  static ExponentialBlock from_block_sums(std::span<const double> y, int m,
                                          std::span<const double> tail = {}) {
    if (m < 1 || y.empty() || tail.size() >= static_cast<std::size_t>(m)) {
      throw std::invalid_argument("ExponentialBlock: need m >= 1, one block, tail shorter than m");
    }
    std::vector<double> e;
    e.reserve(y.size() * static_cast<std::size_t>(m) + tail.size());
    for (double yi : y) {
      for (int k = 0; k < m; ++k) {
        e.push_back(yi / static_cast<double>(m));
      }
    }
    e.insert(e.end(), tail.begin(), tail.end());
    ExponentialBlock b = from_exponentials(std::move(e), m);
    b.block_sums.assign(y.begin(), y.end());
    b.total = compensated_sum(b.block_sums);
    b.partial_sum = b.total + b.tail_sum;
    return b;
  }
};

inline ExponentialBlock sample_block(std::size_t n, int m, RngStream &rng) {
  if (m < 1 || n < static_cast<std::size_t>(m)) {
    throw std::invalid_argument("sample_block: need m >= 1 and n >= m");
  }
  std::vector<double> e(n);
  for (double &x : e) {
    x = rng.exponential();
  }
  return ExponentialBlock::from_exponentials(std::move(e), m);
}

inline ExponentialBlock sample_block(std::size_t n, int m, std::uint64_t seed,
                                     std::uint64_t stream) {
  RngStream rng(seed, stream);
  return sample_block(n, m, rng);
}

// N block sums of m unit exponentials: an i.i.d. sample from F^(m), drawn
// without keeping the individual exponentials.
inline std::vector<double> sample_block_sums(std::size_t N, int m, RngStream &rng) {
  std::vector<double> y(N);
  for (double &v : y) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
      s += rng.exponential();
    }
    v = s;
  }
  return y;
}

// D_i = Y_i / S_n for i < N; the last spacing is (Y_N + tail) / S_n. For
// n = mN this is Y_i / T_N.
inline SpacingsSet spacings_via_pyke(const ExponentialBlock &block) {
  SpacingsSet set;
  set.m = block.m;
  set.n = block.n;
  set.N = block.N;
  set.spacings.resize(block.N);
  for (std::size_t i = 0; i < block.N; ++i) {
    set.spacings[i] = block.block_sums[i] / block.partial_sum;
  }
  set.spacings.back() = (block.block_sums.back() + block.tail_sum) / block.partial_sum;
  return set;
}

// Empirical distribution G_N and quantile function K_N of Y_1..Y_N.
class GammaSample {
public:
  explicit GammaSample(std::span<const double> y) : sorted_(y.begin(), y.end()) {
    if (sorted_.empty()) {
      throw std::invalid_argument("GammaSample: empty sample");
    }
    std::sort(sorted_.begin(), sorted_.end());
  }

  std::size_t size() const { return sorted_.size(); }
  std::span<const double> order_statistics() const { return sorted_; }

  // (1/N) #{Y_i <= x}
  double G(double x) const {
    return static_cast<double>(std::upper_bound(sorted_.begin(), sorted_.end(), x) -
                               sorted_.begin()) /
           static_cast<double>(sorted_.size());
  }

  // (1/N) #{Y_i < x}
  double G_strict(double x) const {
    return static_cast<double>(std::lower_bound(sorted_.begin(), sorted_.end(), x) -
                               sorted_.begin()) /
           static_cast<double>(sorted_.size());
  }

  // inf{x : G(x) >= t}: the i-th order statistic on ((i-1)/N, i/N]; 0 at t = 0.
  double K(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw std::domain_error("GammaSample::K: t must lie in [0, 1]");
    }
    if (t == 0.0) {
      return 0.0;
    }
    return sorted_[quantile_cell(t, sorted_.size()) - 1];
  }

private:
  std::vector<double> sorted_;
};

inline ProcessPath beta_process(const GammaSample &sample, int m, const CdfGrid &grid) {
  const double root_n = std::sqrt(static_cast<double>(sample.size()));
  ProcessPath path{PathKind::beta, m, 0, sample.size(), grid.x, {}};
  path.values.resize(grid.x.size());
  for (std::size_t j = 0; j < grid.x.size(); ++j) {
    path.values[j] = root_n * (sample.G(grid.x[j]) - grid.cdf[j]);
  }
  return path;
}

// beta_N(x) = sqrt(N) (G_N(x) - F(x)).
inline ProcessPath beta_process(const ExponentialBlock &block, std::span<const double> grid,
                                const GammaKernel &kernel) {
  ProcessPath path = beta_process(GammaSample(block.block_sums), block.m, make_cdf_grid(kernel, grid));
  path.n = block.n;
  return path;
}

inline ProcessPath kappa_process(const GammaSample &sample, int m, const QuantileGrid &grid) {
  const double root_n = std::sqrt(static_cast<double>(sample.size()));
  ProcessPath path{PathKind::kappa, m, 0, sample.size(), grid.t, {}};
  path.values.resize(grid.t.size());
  for (std::size_t j = 0; j < grid.t.size(); ++j) {
    path.values[j] = root_n * grid.density[j] * (grid.quantile[j] - sample.K(grid.t[j]));
  }
  return path;
}

// kappa_N(t) = sqrt(N) f(Q(t)) (Q(t) - K_N(t)) on a t-grid inside [0, 1).
inline ProcessPath kappa_process(const ExponentialBlock &block, std::span<const double> grid,
                                 const GammaKernel &kernel) {
  ProcessPath path =
      kappa_process(GammaSample(block.block_sums), block.m, make_quantile_grid(kernel, grid));
  path.n = block.n;
  return path;
}

inline ProcessPath uniform_quantile_process(const GammaSample &sample, int m,
                                            std::span<const double> grid,
                                            const GammaKernel &kernel) {
  const double root_n = std::sqrt(static_cast<double>(sample.size()));
  ProcessPath path{PathKind::uniform_quantile, m, 0, sample.size(), {grid.begin(), grid.end()}, {}};
  path.values.resize(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    path.values[j] = root_n * (grid[j] - kernel.cdf(sample.K(grid[j])));
  }
  return path;
}

// U_N(t) = sqrt(N) (t - F(K_N(t))): the uniform quantile process of
// xi_i = F(Y_i), on a t-grid inside [0, 1].
inline ProcessPath uniform_quantile_process(const ExponentialBlock &block,
                                            std::span<const double> grid,
                                            const GammaKernel &kernel) {
  ProcessPath path =
      uniform_quantile_process(GammaSample(block.block_sums), block.m, grid, kernel);
  path.n = block.n;
  return path;
}

// Two constructions of one process on shared randomness.
struct PathPair {
  ProcessPath assembled;
  ProcessPath direct;

  double max_discrepancy() const { return mspacings::max_discrepancy(assembled, direct); }
};

inline void require_exact_multiple(const ExponentialBlock &block, const char *who) {
  if (!block.exact_multiple()) {
    throw std::invalid_argument(std::string(who) + ": n must be a multiple of m");
  }
}

// alpha^1_N(x) = beta_N(x T_N / (mN)) + R_N(x), with
// R_N(x) = sqrt(N) (F(x T_N / (mN)) - F(x)), against alpha_n computed from
// the spacings Y_i / T_N.
inline PathPair alpha_via_representation(const ExponentialBlock &block, const CdfGrid &grid,
                                         const GammaKernel &kernel) {
  require_exact_multiple(block, "alpha_via_representation");
  const GammaSample sample(block.block_sums);
  const double N = static_cast<double>(block.N);
  const double root_n = std::sqrt(N);
  const double scale = block.total / (static_cast<double>(block.m) * N);

  PathPair pair;
  pair.assembled = ProcessPath{PathKind::alpha, block.m, block.n, block.N, grid.x, {}};
  pair.assembled.values.resize(grid.x.size());
  for (std::size_t j = 0; j < grid.x.size(); ++j) {
    const double y = grid.x[j] * scale;
    const double f_y = kernel.cdf(y);
    const double beta = root_n * (sample.G(y) - f_y);
    const double remainder = root_n * (f_y - grid.cdf[j]);
    pair.assembled.values[j] = beta + remainder;
  }
  pair.direct = alpha_process(spacings_via_pyke(block), grid);
  return pair;
}

inline PathPair alpha_via_representation(const ExponentialBlock &block,
                                         std::span<const double> grid,
                                         const GammaKernel &kernel) {
  return alpha_via_representation(block, make_cdf_grid(kernel, grid), kernel);
}

// gamma^1_N(t) = (mN / T_N) (kappa_N(t) + sqrt(N) (T_N / (mN) - 1) phi_m(t)),
// against gamma_n computed from the ordered spacings Y_i / T_N.
inline PathPair gamma_via_representation(const ExponentialBlock &block, const QuantileGrid &grid) {
  require_exact_multiple(block, "gamma_via_representation");
  const GammaSample sample(block.block_sums);
  const double N = static_cast<double>(block.N);
  const double root_n = std::sqrt(N);
  const double ratio = block.total / (static_cast<double>(block.m) * N);

  PathPair pair;
  pair.assembled = kappa_process(sample, block.m, grid);
  pair.assembled.kind = PathKind::gamma;
  pair.assembled.n = block.n;
  for (std::size_t j = 0; j < grid.t.size(); ++j) {
    const double phi = grid.density[j] * grid.quantile[j];
    pair.assembled.values[j] =
        (pair.assembled.values[j] + root_n * (ratio - 1.0) * phi) / ratio;
  }
  pair.direct = gamma_process(order_spacings(spacings_via_pyke(block)), grid);
  return pair;
}

inline PathPair gamma_via_representation(const ExponentialBlock &block,
                                         std::span<const double> grid,
                                         const GammaKernel &kernel) {
  return gamma_via_representation(block, make_quantile_grid(kernel, grid));
}

// sqrt(N) (G_{N,m}(x S_n / (mN)) - F(x)) for any n >= m, where G_{N,m}
// counts Y_1..Y_{N-1} and the final block E_{(N-1)m+1} + ... + E_n with
// strict inequalities; against alpha_n computed from spacings_via_pyke.
inline PathPair general_n_empirical(const ExponentialBlock &block, const CdfGrid &grid) {
  const auto order = static_cast<std::size_t>(block.m);
  const double N = static_cast<double>(block.N);
  const double root_n = std::sqrt(N);
  const double scale = block.partial_sum / (static_cast<double>(block.m) * N);

  std::vector<double> counted(block.block_sums.begin(), block.block_sums.end() - 1);
  counted.push_back(compensated_sum(std::span<const double>(block.exponentials).subspan((block.N - 1) * order)));
  const GammaSample sample(counted);

  PathPair pair;
  pair.assembled = ProcessPath{PathKind::alpha, block.m, block.n, block.N, grid.x, {}};
  pair.assembled.values.resize(grid.x.size());
  for (std::size_t j = 0; j < grid.x.size(); ++j) {
    pair.assembled.values[j] = root_n * (sample.G_strict(grid.x[j] * scale) - grid.cdf[j]);
  }
  pair.direct = alpha_process(spacings_via_pyke(block), grid);
  return pair;
}

inline PathPair general_n_empirical(const ExponentialBlock &block, std::span<const double> grid,
                                    const GammaKernel &kernel) {
  if (kernel.m() != block.m) {
    throw std::invalid_argument("general_n_empirical: kernel order differs from block order");
  }
  return general_n_empirical(block, make_cdf_grid(kernel, grid));
}

} // namespace mspacings
