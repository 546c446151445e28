#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mspacings/spacings.hpp"
#include "mspacings/stats.hpp"

using namespace mspacings;

namespace {

SpacingsSet spacings_of(std::vector<double> interior, int m) {
  return compute_spacings(SortedUniformSample::from_interior(std::move(interior)), m);
}

} // namespace

TEST(Spacings, HandEvaluatedExamples) {
  const auto two = spacings_of({0.7, 0.1, 0.4}, 2);
  EXPECT_EQ(two.n, 4u);
  EXPECT_EQ(two.N, 2u);
  ASSERT_EQ(two.spacings.size(), 2u);
  EXPECT_DOUBLE_EQ(two.spacings[0], 0.4);
  EXPECT_DOUBLE_EQ(two.spacings[1], 0.6);

  const auto one = spacings_of({0.2, 0.5}, 1);
  ASSERT_EQ(one.spacings.size(), 3u);
  EXPECT_DOUBLE_EQ(one.spacings[0], 0.2);
  EXPECT_DOUBLE_EQ(one.spacings[1], 0.3);
  EXPECT_DOUBLE_EQ(one.spacings[2], 0.5);
}

TEST(Spacings, SingleSpacingWhenNEqualsM) {
  const auto s = spacings_of({0.3, 0.9}, 3);
  ASSERT_EQ(s.N, 1u);
  EXPECT_DOUBLE_EQ(s.spacings[0], 1.0);
}

TEST(Spacings, LastSpacingAbsorbsTail) {
  // n = 5, m = 2: N = 2, D_2 = 1 - U_{2,5}.
  const auto s = spacings_of({0.1, 0.2, 0.6, 0.8}, 2);
  ASSERT_EQ(s.N, 2u);
  EXPECT_DOUBLE_EQ(s.spacings[0], 0.2);
  EXPECT_DOUBLE_EQ(s.spacings[1], 0.8);
}

TEST(Spacings, SumToOneAndNonnegative) {
  RngStream rng(5, 0);
  for (int m = 1; m <= 4; ++m) {
    for (std::size_t n : {m * 10u, m * 10u + 1, 97u}) {
      const auto s = compute_spacings(SortedUniformSample::draw(n, rng), m);
      double total = 0;
      for (double d : s.spacings) {
        EXPECT_GE(d, 0.0);
        total += d;
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Spacings, InvalidInput) {
  EXPECT_THROW(SortedUniformSample::from_interior({0.5, 1.5}), std::invalid_argument);
  EXPECT_THROW(SortedUniformSample::from_interior({-0.1}), std::invalid_argument);
  EXPECT_THROW(spacings_of({0.5}, 3), std::invalid_argument);
  EXPECT_THROW(spacings_of({0.5}, 0), std::invalid_argument);
}

TEST(Spacings, EmpiricalCdfOfNormalized) {
  const auto s = spacings_of({0.1, 0.4, 0.7}, 2);  // normalized 1.6, 2.4
  EXPECT_DOUBLE_EQ(empirical_cdf_of_normalized(s, -1.0), 0.0);
  EXPECT_DOUBLE_EQ(empirical_cdf_of_normalized(s, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(empirical_cdf_of_normalized(s, 2.4), 1.0);
  EXPECT_DOUBLE_EQ(empirical_cdf_of_normalized(s, 100.0), 1.0);
}

TEST(Spacings, QuantileCellBoundaries) {
  EXPECT_EQ(quantile_cell(0.5, 2), 1u);
  EXPECT_EQ(quantile_cell(0.5000001, 2), 2u);
  EXPECT_EQ(quantile_cell(1.0, 2), 2u);
  EXPECT_EQ(quantile_cell(1e-12, 7), 1u);
  for (std::size_t N : {3u, 7u, 10u, 1000u}) {
    for (std::size_t i = 1; i <= N; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(N);
      ASSERT_EQ(quantile_cell(t, N), i);
    }
  }
}

TEST(AlphaProcess, HandExample) {
  const GammaKernel k(2);
  const auto s = spacings_of({0.1, 0.4, 0.7}, 2);
  const std::vector<double> grid{0.0, 2.0};
  const auto path = alpha_process(s, grid, k);
  EXPECT_DOUBLE_EQ(path.values[0], 0.0);
  const double expected = std::sqrt(2.0) * (0.5 - (1 - 3 * std::exp(-2.0)));
  EXPECT_NEAR(path.values[1], expected, 1e-14);
  EXPECT_NEAR(expected, -0.13293, 1e-5);
  EXPECT_THROW(alpha_process(s, grid, GammaKernel(1)), std::invalid_argument);
}

TEST(AlphaProcess, VanishesFarOut) {
  const GammaKernel k(1);
  RngStream rng(2, 2);
  const auto s = compute_spacings(SortedUniformSample::draw(200, rng), 1);
  const std::vector<double> grid{0.0, 1e3};
  const auto path = alpha_process(s, grid, k);
  EXPECT_DOUBLE_EQ(path.values[0], 0.0);
  EXPECT_NEAR(path.values[1], 0.0, 1e-12);
}

TEST(QuantileSpacings, StepFunction) {
  const auto ordered = order_spacings(spacings_of({0.1, 0.4, 0.7}, 2));
  EXPECT_DOUBLE_EQ(quantile_spacings_function(ordered, 0.0, 2, 2), 0.0);
  EXPECT_NEAR(quantile_spacings_function(ordered, 0.5, 2, 2), 1.6, 1e-15);
  EXPECT_NEAR(quantile_spacings_function(ordered, 0.51, 2, 2), 2.4, 1e-15);
  EXPECT_NEAR(quantile_spacings_function(ordered, 1.0, 2, 2), 2.4, 1e-15);
  EXPECT_THROW(quantile_spacings_function(ordered, 1.5, 2, 2), std::domain_error);
  EXPECT_THROW(quantile_spacings_function(ordered, 0.5, 2, 3), std::invalid_argument);
}

TEST(GammaProcess, HandExample) {
  const GammaKernel k(2);
  const auto ordered = order_spacings(spacings_of({0.1, 0.4, 0.7}, 2));
  const std::vector<double> grid{0.0, 0.5};
  const auto path = gamma_process(ordered, grid, k);
  EXPECT_DOUBLE_EQ(path.values[0], 0.0);
  const double q = k.quantile(0.5);
  EXPECT_NEAR(path.values[1], std::sqrt(2.0) * k.pdf(q) * (q - 1.6), 1e-14);
}

TEST(GammaProcess, ZeroAtOriginForSimpleSpacings) {
  const GammaKernel k(1);
  RngStream rng(3, 3);
  const auto ordered = order_spacings(compute_spacings(SortedUniformSample::draw(50, rng), 1));
  const std::vector<double> grid{0.0, 0.5};
  EXPECT_DOUBLE_EQ(gamma_process(ordered, grid, k).values[0], 0.0);
}

TEST(Grids, DefaultGridsAndClamp) {
  const GammaKernel k(1);
  const auto x = default_x_grid(k, 0.9, 512);
  EXPECT_EQ(x.size(), 512u);
  EXPECT_DOUBLE_EQ(x.front(), 0.0);
  EXPECT_NEAR(x.back(), std::log(10.0), 1e-12);
  const auto t = default_t_grid(1.0, 16);
  EXPECT_DOUBLE_EQ(t.back(), kMaxGridProbability);
  EXPECT_THROW(default_t_grid(0.0), std::invalid_argument);
  EXPECT_THROW(default_t_grid(1.2), std::invalid_argument);
}

TEST(ProcessPath, SerializesAndValidates) {
  ProcessPath p{PathKind::alpha, 1, 3, 3, {0.0, 0.5}, {0.0, 0.25}};
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(to_csv(p), "grid,value\n0,0\n0.5,0.25\n");
  const auto j = to_json(p);
  EXPECT_EQ(j["kind"], "alpha");
  EXPECT_EQ(j["values"][1], 0.25);
  ProcessPath bad = p;
  bad.grid = {0.5, 0.5};
  EXPECT_THROW(bad.validate(), std::logic_error);
  EXPECT_DOUBLE_EQ(p.sup_abs(), 0.25);
}

TEST(AlphaProcess, JumpsBySqrtNOverNTimesMultiplicity) {
  const GammaKernel k(1);
  // Interior {0.25, 0.5, 0.75}: four equal spacings, normalized value 1.
  const auto s = spacings_of({0.25, 0.5, 0.75}, 1);
  const double x = s.normalized(0);
  const std::vector<double> grid{std::nextafter(x, 0.0), x};
  const auto path = alpha_process(s, grid, k);
  const double jump = path.values[1] - path.values[0];
  const double cdf_step = std::sqrt(4.0) * (k.cdf(grid[1]) - k.cdf(grid[0]));
  EXPECT_NEAR(jump + cdf_step, std::sqrt(4.0) / 4.0 * 4.0, 1e-12);
}

// Spacings are exchangeable: n D_1 and n D_ceil(n/2) share one law. The two
// samples come from disjoint halves of the replications.
TEST(Spacings, ExchangeableAcrossIndices) {
  const std::size_t n = 20, reps = 20000;
  std::vector<double> first, middle;
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream rng(71, r);
    const auto s = compute_spacings(SortedUniformSample::draw(n, rng), 1);
    (r % 2 == 0 ? first : middle).push_back(n * s.spacings[r % 2 == 0 ? 0 : (n + 1) / 2 - 1]);
  }
  EXPECT_LT(ks_two_sample(first, middle), ks_two_sample_critical(first.size(), middle.size(), 1e-3));
}

// The law of mN D_i approaches F^(m); checked on the pooled normalized
// spacings with a fixed budget of 10^6 values per n.
TEST(Spacings, NormalizedLawApproachesGamma) {
  const int m = 2;
  const GammaKernel k(m);
  std::vector<double> distances;
  for (std::size_t n : {50u, 200u, 800u, 3200u}) {
    std::vector<double> pooled;
    pooled.reserve(1000000);
    for (std::size_t r = 0; pooled.size() + n / m <= 1000000; ++r) {
      RngStream rng(72, (n << 32) | r);
      const auto s = compute_spacings(SortedUniformSample::draw(n, rng), m);
      for (std::size_t i = 0; i < s.N; ++i) {
        pooled.push_back(s.normalized(i));
      }
    }
    distances.push_back(ks_one_sample(pooled, [&](double x) { return k.cdf(x); }));
  }
  EXPECT_GT(distances[0], distances[1]);
  EXPECT_GT(distances[0], 2 * distances[3]);
  EXPECT_GT(distances[0], 2 * distances[2]);
}
