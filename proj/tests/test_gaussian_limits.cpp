#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mspacings/gaussian_limits.hpp"
#include "mspacings/stats.hpp"

using namespace mspacings;

TEST(Bridge, EndpointsPinned) {
  const std::vector<double> grid{0.0, 0.25, 0.5, 1.0};
  const auto b = simulate_bridge(grid, 4, 4);
  EXPECT_DOUBLE_EQ(b.values.front(), 0.0);
  EXPECT_DOUBLE_EQ(b.values.back(), 0.0);
  EXPECT_THROW(simulate_bridge(std::vector<double>{0.5, 0.2}, 1, 1), std::invalid_argument);
}

TEST(Bridge, VarianceAndCovariance) {
  const std::vector<double> grid{0.2, 0.7};
  const std::size_t paths = 10000;
  std::vector<double> a(paths), b(paths);
  for (std::size_t p = 0; p < paths; ++p) {
    const auto path = simulate_bridge(grid, 17, p);
    a[p] = path.values[0];
    b[p] = path.values[1];
  }
  const auto var = sample_covariance(a, a);
  EXPECT_NEAR(var.value, 0.2 * 0.8, 3 * var.std_error);
  const auto cov = sample_covariance(a, b);
  EXPECT_NEAR(cov.value, 0.2 * 0.3, 3 * cov.std_error);
}

TEST(Bridge, SamplerReturnsProbeOrder) {
  const BridgeSampler sampler({0.9, 0.1, 1.0, 0.1, 0.0});
  RngStream rng(1, 1);
  const auto v = sampler.sample(rng);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_DOUBLE_EQ(v[1], v[3]);
  EXPECT_DOUBLE_EQ(v[2], 0.0);
  EXPECT_DOUBLE_EQ(v[4], 0.0);
}

TEST(BridgeIntegral, ZeroPathGivesZero) {
  const auto spec = LimitProcessSpec::make(GammaKernel(1));
  const auto nodes = spec.quadrature_nodes();
  EXPECT_EQ(nodes.size(), 2049u);
  BridgePath zero{nodes, std::vector<double>(nodes.size(), 0.0), 0, 0};
  EXPECT_DOUBLE_EQ(bridge_integral(zero, spec), 0.0);
  EXPECT_LT(GammaKernel(1).survival(spec.integral_truncation), 1e-8);
}

TEST(LimitProcesses, EndpointsVanish) {
  const GammaKernel k(2);
  const LimitModel model(k, {0.0, 0.5, 1.0}, {0.0, 1.0, 200.0});
  RngStream rng(6, 6);
  for (int i = 0; i < 20; ++i) {
    const auto joint = model.simulate(rng);
    const auto w = model.limit_W(joint);
    const auto v = model.limit_V(joint);
    EXPECT_DOUBLE_EQ(w.values[0], 0.0);
    EXPECT_DOUBLE_EQ(w.values[2], 0.0);
    EXPECT_DOUBLE_EQ(v.values[0], 0.0);
    EXPECT_NEAR(v.values[2], 0.0, 1e-12);
  }
}

// V*(x) and W*(F(x)) are the same functional of one bridge.
TEST(LimitProcesses, VIsWComposedWithF) {
  const GammaKernel k(2);
  const std::vector<double> x{0.5, 1.0, 2.0, 4.0};
  std::vector<double> t;
  for (double v : x) {
    t.push_back(k.cdf(v));
  }
  const LimitModel model(k, t, x);
  RngStream rng(8, 8);
  const auto joint = model.simulate(rng);
  const auto w = model.limit_W(joint);
  const auto v = model.limit_V(joint);
  for (std::size_t j = 0; j < x.size(); ++j) {
    EXPECT_NEAR(w.values[j], v.values[j], 1e-12);
  }
}

TEST(Covariances, ClosedFormValues) {
  const GammaKernel k1(1);
  EXPECT_DOUBLE_EQ(covariance_W(k1, 0.0, 0.4), 0.0);
  const double phi = 0.5 * std::log(2.0);
  EXPECT_NEAR(covariance_W(k1, 0.5, 0.5), 0.25 - phi * phi, 1e-13);
  EXPECT_NEAR(covariance_W(k1, 0.5, 0.5), 0.129887, 1e-6);
  const double F1 = 1 - std::exp(-1.0), F2 = 1 - std::exp(-2.0);
  EXPECT_NEAR(covariance_V(k1, 1.0, 2.0), F1 - F1 * F2 - 2 * std::exp(-3.0), 1e-14);
  EXPECT_NEAR(covariance_V(k1, 1.0, 2.0), -0.0140259, 1e-7);
  EXPECT_DOUBLE_EQ(covariance_V(k1, 0.0, 2.0), 0.0);
  const GammaKernel k2(2);
  EXPECT_NEAR(covariance_V(k2, 1.3, 2.2), covariance_W(k2, k2.cdf(1.3), k2.cdf(2.2)), 1e-12);
}

TEST(Covariances, MonteCarloWAtMedian) {
  const GammaKernel k(1);
  const LimitModel model(k, {0.5}, {});
  std::vector<double> w(10000);
  for (std::size_t p = 0; p < w.size(); ++p) {
    RngStream rng(21, p);
    w[p] = model.limit_W(model.simulate(rng)).values[0];
  }
  const auto c = sample_covariance(w, w);
  EXPECT_NEAR(c.value, 0.129887, 3 * c.std_error);
}

TEST(Covariances, MonteCarloVOffDiagonal) {
  const GammaKernel k(1);
  const LimitModel model(k, {}, {1.0, 2.0});
  std::vector<double> a(10000), b(10000);
  for (std::size_t p = 0; p < a.size(); ++p) {
    RngStream rng(22, p);
    const auto v = model.limit_V(model.simulate(rng));
    a[p] = v.values[0];
    b[p] = v.values[1];
  }
  const auto c = sample_covariance(a, b);
  EXPECT_NEAR(c.value, covariance_V(k, 1.0, 2.0), 3 * c.std_error);
}

TEST(Scaffolding, ScoreEqualsPhi) {
  for (int m = 1; m <= 3; ++m) {
    const GammaKernel k(m);
    for (double t : {0.05, 0.3, 0.5, 0.8, 0.95}) {
      EXPECT_NEAR(score_by_quadrature(k, t) / k.phi(t), 1.0, 1e-6) << "m=" << m << " t=" << t;
    }
    EXPECT_DOUBLE_EQ(score_by_quadrature(k, 0.0), 0.0);
  }
}

TEST(Scaffolding, BridgeIntegralVarianceEqualsM) {
  for (int m = 1; m <= 3; ++m) {
    EXPECT_NEAR(bridge_integral_variance_by_quadrature(GammaKernel(m)) / m, 1.0, 1e-6);
  }
}

TEST(Scaffolding, ModulusFrequencyIsAProbability) {
  const double p = modulus_exceedance_frequency(1.0, 0.1, 1.0, 256, 200, 3);
  EXPECT_GE(p, 0.0);
  EXPECT_LE(p, 1.0);
  EXPECT_DOUBLE_EQ(modulus_exceedance_frequency(1.0, 0.1, 100.0, 256, 50, 3), 0.0);
}

TEST(Covariances, VarianceNonnegative) {
  for (int m = 1; m <= 3; ++m) {
    const GammaKernel k(m);
    for (double x : linear_grid(0.0, k.quantile(0.999), 200)) {
      ASSERT_GE(covariance_V(k, x, x), -1e-15);
    }
  }
}

// |I| / sigma_1 is standard normal in absolute value.
TEST(BridgeIntegral, GaussianTail) {
  const GammaKernel k(2);
  const LimitModel model(k, {0.5}, {});
  const std::size_t paths = 10000;
  const double threshold = 1.5;
  std::size_t hits = 0;
  for (std::size_t p = 0; p < paths; ++p) {
    RngStream rng(91, p);
    hits += std::abs(model.simulate(rng).integral) / std::sqrt(2.0) > threshold ? 1 : 0;
  }
  const double expected = 2 * (1 - normal_cdf(threshold));
  const double freq = static_cast<double>(hits) / paths;
  EXPECT_NEAR(freq, expected, 3 * std::sqrt(expected * (1 - expected) / paths));
}
