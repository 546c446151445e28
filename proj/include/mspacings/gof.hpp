#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "mspacings/gamma_kernel.hpp"
#include "mspacings/gaussian_limits.hpp"
#include "mspacings/parallel.hpp"
#include "mspacings/rng.hpp"
#include "mspacings/spacings.hpp"

namespace mspacings {

// Sorted draws of sup_{x <= Q(a)} |V*(x)|, the null law of the spacings
// goodness-of-fit statistic.
struct NullTable {
  int m = 1;
  double a = 0.9;
  std::size_t grid_points = 512;
  std::uint64_t seed = 0;
  std::vector<double> sorted_sups;

  // Number of null draws >= statistic.
  std::size_t count_at_least(double statistic) const {
    return static_cast<std::size_t>(
        sorted_sups.end() -
        std::lower_bound(sorted_sups.begin(), sorted_sups.end(), statistic));
  }

  double p_value(double statistic) const {
    return static_cast<double>(count_at_least(statistic) + 1) /
           static_cast<double>(sorted_sups.size() + 1);
  }
};

inline constexpr std::uint64_t kGofNullTag = 10;

inline NullTable simulate_null_table(int m, double a, std::size_t null_reps, std::uint64_t seed,
                                     std::size_t grid_points = 512, unsigned workers = 0) {
  if (null_reps < 1) {
    throw std::invalid_argument("null table: need at least one replication");
  }
  const GammaKernel kernel(m);
  const LimitModel model(kernel, {}, default_x_grid(kernel, a, grid_points));
  NullTable table{m, a, grid_points, seed, std::vector<double>(null_reps)};
  parallel_for(null_reps, workers, [&](std::size_t r) {
    RngStream rng(seed, stream_id(kGofNullTag, 0, r));
    table.sorted_sups[r] = model.limit_V(model.simulate(rng)).sup_abs();
  });
  std::sort(table.sorted_sups.begin(), table.sorted_sups.end());
  return table;
}

// sup_{x <= Q(a)} |alpha_n(x)| of data points in [0, 1]; the endpoints 0 and
// 1 are adjoined, so k data points give n = k + 1.
inline double gof_statistic(std::span<const double> data, int m, double a,
                            std::size_t grid_points = 512) {
  if (m < 1) {
    throw std::invalid_argument("gof: m must be >= 1");
  }
  if (data.size() < 2 * static_cast<std::size_t>(m)) {
    throw std::invalid_argument("gof: need at least 2m data points");
  }
  const GammaKernel kernel(m);
  const auto sample =
      SortedUniformSample::from_interior(std::vector<double>(data.begin(), data.end()));
  return alpha_process(compute_spacings(sample, m), default_x_grid(kernel, a, grid_points), kernel)
      .sup_abs();
}

struct GofResult {
  double statistic = 0.0;
  std::size_t n = 0;
  std::size_t N = 0;
  std::size_t null_reps = 0;
  double p_value = 1.0;
  double level = 0.05;
  bool reject = false;
};

inline GofResult gof_test(std::span<const double> data, const NullTable &table,
                          double level = 0.05) {
  if (!(level > 0 && level < 1)) {
    throw std::invalid_argument("gof: level must lie in (0, 1)");
  }
  GofResult result;
  result.statistic = gof_statistic(data, table.m, table.a, table.grid_points);
  result.n = data.size() + 1;
  result.N = result.n / static_cast<std::size_t>(table.m);
  result.null_reps = table.sorted_sups.size();
  result.p_value = table.p_value(result.statistic);
  result.level = level;
  result.reject = result.p_value <= level;
  return result;
}

inline GofResult gof_test(std::span<const double> data, int m, double a, std::size_t null_reps,
                          std::uint64_t seed, double level = 0.05, std::size_t grid_points = 512,
                          unsigned workers = 0) {
  // Validate the data before paying for the null table.
  gof_statistic(data, m, a, grid_points);
  return gof_test(data, simulate_null_table(m, a, null_reps, seed, grid_points, workers), level);
}

inline nlohmann::ordered_json to_json(const GofResult &r) {
  nlohmann::ordered_json j;
  j["statistic"] = r.statistic;
  j["n"] = r.n;
  j["N"] = r.N;
  j["null_reps"] = r.null_reps;
  j["p_value"] = r.p_value;
  j["level"] = r.level;
  j["reject"] = r.reject;
  return j;
}

} // namespace mspacings
