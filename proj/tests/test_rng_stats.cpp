#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "mspacings/parallel.hpp"
#include "mspacings/rng.hpp"
#include "mspacings/stats.hpp"

using namespace mspacings;

TEST(Rng, SameSeedAndStreamRepeat) {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformIsOpenInterval) {
  RngStream rng(1, 0);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 3 * std::sqrt(1.0 / 12 / 100000));
}

TEST(Rng, ExponentialAndNormalMoments) {
  RngStream rng(3, 1);
  const int n = 200000;
  std::vector<double> e(n), z(n);
  for (int i = 0; i < n; ++i) {
    e[i] = rng.exponential();
    z[i] = rng.normal();
  }
  const auto se = summarize(e);
  const auto sz = summarize(z);
  EXPECT_NEAR(se.mean, 1.0, 4 * se.std_error);
  EXPECT_NEAR(se.std_dev, 1.0, 0.01);
  EXPECT_NEAR(sz.mean, 0.0, 4 * sz.std_error);
  EXPECT_NEAR(sz.std_dev, 1.0, 0.01);
}

TEST(Rng, StreamIdPacksFields) {
  EXPECT_EQ(stream_id(1, 2, 3), (std::uint64_t{1} << 48) | (std::uint64_t{2} << 32) | 3);
}

TEST(Stats, LogPlusFloorsAtE) {
  EXPECT_DOUBLE_EQ(log_plus(0.5), 1.0);
  EXPECT_DOUBLE_EQ(log_plus(std::exp(1.0)), 1.0);
  EXPECT_NEAR(log_plus(100.0), std::log(100.0), 1e-15);
}

TEST(Stats, CompensatedSumRecoversSmallTerms) {
  std::vector<double> xs{1e16, 1.0, -1e16, 1.0};
  EXPECT_DOUBLE_EQ(compensated_sum(xs), 2.0);
}

TEST(Stats, SummaryOfKnownSample) {
  std::vector<double> xs{1, 2, 3, 4};
  const auto s = summarize(xs);
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_NEAR(s.std_dev, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_NEAR(s.std_error, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
}

TEST(Stats, CovarianceOfLinearPair) {
  std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 6, 8, 10};
  const auto c = sample_covariance(x, y);
  EXPECT_NEAR(c.value, 5.0, 1e-14);
  EXPECT_GE(c.std_error, 0.0);
}

TEST(Stats, WeightedFitRecoversExactLine) {
  std::vector<double> x{0, 1, 2, 3}, y{1, -1, -3, -5}, w{1, 2, 3, 4};
  const auto f = weighted_line_fit(x, y, w);
  EXPECT_NEAR(f.slope, -2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  // Inverse-variance weights: SE = 1 / sqrt(sum w (x - xbar_w)^2) = 1 / sqrt(10).
  EXPECT_NEAR(f.slope_std_error, 1.0 / std::sqrt(10.0), 1e-12);
  EXPECT_THROW(weighted_line_fit(std::vector<double>{1, 2}, std::vector<double>{1, 2},
                                 std::vector<double>{1, 1}),
               std::invalid_argument);
}

TEST(Stats, TrapezoidIsExactForLines) {
  const auto x = linear_grid(0.0, 2.0, 11);
  std::vector<double> y;
  for (double v : x) {
    y.push_back(3 * v + 1);
  }
  EXPECT_NEAR(trapezoid(x, y), 8.0, 1e-13);
}

TEST(Stats, KolmogorovSmirnovDistances) {
  std::vector<double> a{0.1, 0.2, 0.3}, b{0.1, 0.2, 0.3}, c{1.1, 1.2};
  EXPECT_DOUBLE_EQ(ks_two_sample(a, b), 0.0);
  EXPECT_DOUBLE_EQ(ks_two_sample(a, c), 1.0);
  std::vector<double> d{0.5};
  EXPECT_DOUBLE_EQ(ks_one_sample(d, [](double x) { return x; }), 0.5);
  EXPECT_NEAR(ks_coefficient(0.05), 1.3581015157406195, 1e-12);
  EXPECT_NEAR(ks_two_sample_critical(2000, 2000, 1e-3),
              std::sqrt(-std::log(5e-4) / 2) * std::sqrt(2.0 / 2000), 1e-15);
}

TEST(Stats, KolmogorovSmirnovTiesHandled) {
  std::vector<double> a{1, 1, 2}, b{1, 2, 2};
  EXPECT_NEAR(ks_two_sample(a, b), 1.0 / 3.0, 1e-15);
}

TEST(Parallel, ResultsIndependentOfWorkerCount) {
  auto fill = [](unsigned workers) {
    std::vector<double> out(1000);
    parallel_for(out.size(), workers, [&](std::size_t i) {
      RngStream rng(9, i);
      out[i] = rng.normal();
    });
    return out;
  };
  EXPECT_EQ(fill(1), fill(4));
  EXPECT_EQ(fill(1), fill(0));
}

TEST(Parallel, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) {
                                throw std::runtime_error("boom");
                              }
                            }),
               std::runtime_error);
}
