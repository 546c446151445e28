#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace mspacings {

// log(u v e): every logarithm used in rate envelopes is at least 1.
inline double log_plus(double u) {
  return std::log(std::max(u, std::numbers::e));
}

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// Neumaier compensated summation; order-dependent only at the 1e-16 level and
// always used in a fixed order by the callers.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + compensation_; }

private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) {
    s.add(x);
  }
  return s.value();
}

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double std_dev = 0.0;  // sample standard deviation (n - 1)
  double std_error = 0.0;
};

inline Summary summarize(std::span<const double> xs) {
  Summary s;
  s.count = xs.size();
  if (xs.empty()) {
    return s;
  }
  const double n = static_cast<double>(xs.size());
  s.mean = compensated_sum(xs) / n;
  CompensatedSum sq;
  for (double x : xs) {
    sq.add((x - s.mean) * (x - s.mean));
  }
  if (xs.size() > 1) {
    s.std_dev = std::sqrt(sq.value() / (n - 1.0));
    s.std_error = s.std_dev / std::sqrt(n);
  }
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 == 1 ? sorted[mid]
                                    : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

struct CovarianceEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Unbiased sample covariance with the standard error of the mean of the
// centred products, the usual Monte Carlo band for a second moment.
inline CovarianceEstimate sample_covariance(std::span<const double> x,
                                            std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("sample_covariance: need two equal samples of size >= 2");
  }
  const double n = static_cast<double>(x.size());
  const double mx = compensated_sum(x) / n;
  const double my = compensated_sum(y) / n;
  std::vector<double> products(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    products[i] = (x[i] - mx) * (y[i] - my);
  }
  const Summary p = summarize(products);
  return {p.mean * n / (n - 1.0), p.std_error};
}

// n equispaced points covering [lo, hi], both ends included.
inline std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  if (points < 2 || !(hi > lo)) {
    throw std::invalid_argument("linear_grid: need points >= 2 and hi > lo");
  }
  std::vector<double> grid(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = lo + step * static_cast<double>(i);
  }
  grid.back() = hi;
  return grid;
}

inline double trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("trapezoid: size mismatch");
  }
  CompensatedSum s;
  for (std::size_t i = 1; i < x.size(); ++i) {
    s.add(0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]));
  }
  return s.value();
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
  double intercept_std_error = 0.0;
};

// Weighted least squares y = intercept + slope * x with weights 1/var(y_i).
inline LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> weights) {
  if (x.size() != y.size() || x.size() != weights.size() || x.size() < 3) {
    throw std::invalid_argument("weighted_line_fit: need >= 3 matched points");
  }
  double sw = 0, swx = 0, swy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(weights[i] > 0) || !std::isfinite(weights[i])) {
      throw std::invalid_argument("weighted_line_fit: weights must be positive and finite");
    }
    sw += weights[i];
    swx += weights[i] * x[i];
    swy += weights[i] * y[i];
  }
  const double xbar = swx / sw;
  const double ybar = swy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += weights[i] * (x[i] - xbar) * (x[i] - xbar);
    sxy += weights[i] * (x[i] - xbar) * (y[i] - ybar);
  }
  if (!(sxx > 0)) {
    throw std::invalid_argument("weighted_line_fit: degenerate abscissae");
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  fit.slope_std_error = std::sqrt(1.0 / sxx);
  fit.intercept_std_error = std::sqrt(1.0 / sw + xbar * xbar / sxx);
  return fit;
}

// Two-sample Kolmogorov-Smirnov distance sup |F1 - F2|; ties across samples
// are stepped together.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("ks_two_sample: empty sample");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// One-sample Kolmogorov-Smirnov distance against a continuous cdf.
template <class Cdf>
double ks_one_sample(std::vector<double> sample, Cdf &&cdf) {
  if (sample.empty()) {
    throw std::invalid_argument("ks_one_sample: empty sample");
  }
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

// Asymptotic Kolmogorov quantile c(alpha) = sqrt(-log(alpha / 2) / 2).
inline double ks_coefficient(double alpha) {
  if (!(alpha > 0 && alpha < 1)) {
    throw std::invalid_argument("ks_coefficient: alpha must be in (0, 1)");
  }
  return std::sqrt(-0.5 * std::log(0.5 * alpha));
}

inline double ks_two_sample_critical(std::size_t n1, std::size_t n2, double alpha) {
  const double a = static_cast<double>(n1), b = static_cast<double>(n2);
  return ks_coefficient(alpha) * std::sqrt((a + b) / (a * b));
}

inline double ks_one_sample_critical(std::size_t n, double alpha) {
  return ks_coefficient(alpha) / std::sqrt(static_cast<double>(n));
}

} // namespace mspacings
