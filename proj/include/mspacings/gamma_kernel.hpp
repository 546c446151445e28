#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mspacings {

// Order-m gamma law with unit scale and mean m: the limit law of normalized
// non-overlapping m-spacings.
//
// m is a positive integer, so the CDF is a finite Poisson sum and no
// incomplete-gamma machinery is needed. Below the mean the lower tail is
// summed directly (sum_{k >= m} of Poisson terms) to avoid cancellation in
// 1 - e^{-t} sum_{k < m} t^k / k!; above the mean the finite sum is used.
class GammaKernel {
public:
  explicit GammaKernel(int m, double quantile_tolerance = 1e-12)
      : m_(m), tolerance_(quantile_tolerance) {
    if (m < 1) {
      throw std::invalid_argument("GammaKernel: order m must be >= 1");
    }
    if (!(quantile_tolerance > 0)) {
      throw std::invalid_argument("GammaKernel: quantile tolerance must be positive");
    }
    log_factorial_ = std::lgamma(static_cast<double>(m));
  }

  int m() const { return m_; }
  double quantile_tolerance() const { return tolerance_; }

  double pdf(double t) const {
    if (t < 0) {
      return 0.0;
    }
    if (m_ == 1) {
      return std::exp(-t);
    }
    if (t == 0) {
      return 0.0;
    }
    return std::exp(static_cast<double>(m_ - 1) * std::log(t) - t - log_factorial_);
  }

  double cdf(double t) const {
    if (t <= 0) {
      return 0.0;
    }
    if (t < static_cast<double>(m_)) {
      return lower_tail(t);
    }
    return 1.0 - upper_tail(t);
  }

  // 1 - F(t), accurate in the far tail.
  double survival(double t) const {
    if (t <= 0) {
      return 1.0;
    }
    if (t < static_cast<double>(m_)) {
      return 1.0 - lower_tail(t);
    }
    return upper_tail(t);
  }

  // Q(p) = inf{x >= 0 : F(x) >= p}. Bracketed Newton with bisection fallback,
  // iterated to machine precision; the residual |F(Q(p)) - p| is then within
  // the kernel tolerance.
  double quantile(double p) const {
    if (!(p >= 0.0) || !(p < 1.0)) {
      throw std::domain_error("GammaKernel::quantile: p must lie in [0, 1)");
    }
    if (p == 0.0) {
      return 0.0;
    }
    double lo = 0.0;
    double hi = static_cast<double>(m_) + 20.0 * std::sqrt(static_cast<double>(m_));
    while (cdf(hi) < p) {
      lo = hi;
      hi *= 2.0;
    }

    // Small-p start from F(x) ~ x^m / m!.
    double x = std::exp((std::log(p) + log_factorial_ + std::log(static_cast<double>(m_))) /
                        static_cast<double>(m_));
    if (!(x > lo && x < hi)) {
      x = 0.5 * (lo + hi);
    }

    for (int iter = 0; iter < 400; ++iter) {
      const double residual = cdf(x) - p;
      if (residual == 0.0) {
        return x;
      }
      if (residual > 0) {
        hi = x;
      } else {
        lo = x;
      }
      const double density = pdf(x);
      double next = density > 0 ? x - residual / density : lo - 1.0;
      if (!(next > lo && next < hi)) {
        next = 0.5 * (lo + hi);
      }
      const double step = std::abs(next - x);
      x = next;
      if (step <= 4.0 * std::numeric_limits<double>::epsilon() * x ||
          hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
        break;
      }
    }
    return x;
  }

  // phi_m(t) = f(Q(t)) Q(t), the direction of the random-normalization
  // correction in both limit processes.
  double phi(double t) const {
    if (!(t >= 0.0) || !(t < 1.0)) {
      throw std::domain_error("GammaKernel::phi: t must lie in [0, 1)");
    }
    const double x = quantile(t);
    return pdf(x) * x;
  }

private:
  // e^{-t} sum_{k >= m} t^k / k!
  double lower_tail(double t) const {
    double term = pdf(t) * t / static_cast<double>(m_);
    double sum = 0.0;
    for (int k = m_ + 1; k < m_ + 2000; ++k) {
      sum += term;
      term *= t / static_cast<double>(k);
      if (term <= sum * 1e-17) {
        break;
      }
    }
    return std::min(sum, 1.0);
  }

  // e^{-t} sum_{k < m} t^k / k!
  double upper_tail(double t) const {
    double term = std::exp(-t);
    double sum = term;
    for (int k = 1; k < m_; ++k) {
      term *= t / static_cast<double>(k);
      sum += term;
    }
    return std::min(sum, 1.0);
  }

  int m_;
  double tolerance_;
  double log_factorial_;
};

// Smallest t0 on the grid {0, step, 2 step, ...} such that the exponential
// tail bound 1 - F(t) <= 2 exp(-t / 2) holds at every grid point of
// [t0, t_max]. Returns t_max + step when even t_max violates the bound.
inline double tail_bound_start(const GammaKernel &kernel, double t_max = 50.0,
                               double step = 0.01) {
  const auto points = static_cast<long>(std::floor(t_max / step + 1e-9));
  for (long i = points; i >= 0; --i) {
    const double t = static_cast<double>(i) * step;
    if (kernel.survival(t) > 2.0 * std::exp(-0.5 * t)) {
      return static_cast<double>(i + 1) * step;
    }
  }
  return 0.0;
}

// Integral of 1 - F over [0, inf), which equals the mean m.
inline double integrated_survival(const GammaKernel &kernel) {
  using boost::math::quadrature::gauss_kronrod;
  const double split = static_cast<double>(kernel.m());
  const auto tail = [&](double t) { return kernel.survival(t); };
  return gauss_kronrod<double, 61>::integrate(tail, 0.0, split, 15, 1e-14) +
         gauss_kronrod<double, 61>::integrate(
             tail, split, std::numeric_limits<double>::infinity(), 15, 1e-14);
}

} // namespace mspacings
