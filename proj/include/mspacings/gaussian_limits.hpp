#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mspacings/gamma_kernel.hpp"
#include "mspacings/process_path.hpp"
#include "mspacings/rng.hpp"
#include "mspacings/stats.hpp"

namespace mspacings {

struct BridgePath {
  std::vector<double> grid;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

// Joint Brownian bridge sampling at an arbitrary set of probe points in
// [0, 1]. Probes may repeat and come in any order; the Wiener path is built
// along the sorted probes from exact Gaussian increments, then B = W - t W(1).
class BridgeSampler {
public:
  explicit BridgeSampler(std::vector<double> probes) : probes_(std::move(probes)) {
    for (double t : probes_) {
      if (!(t >= 0.0 && t <= 1.0)) {
        throw std::domain_error("BridgeSampler: probe points must lie in [0, 1]");
      }
    }
    order_.resize(probes_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return probes_[a] < probes_[b]; });
    root_steps_.resize(order_.size());
    double previous = 0.0;
    for (std::size_t k = 0; k < order_.size(); ++k) {
      root_steps_[k] = std::sqrt(probes_[order_[k]] - previous);
      previous = probes_[order_[k]];
    }
    root_last_step_ = std::sqrt(1.0 - previous);
  }

  std::size_t size() const { return probes_.size(); }

  std::vector<double> sample(RngStream &rng) const {
    std::vector<double> values(probes_.size());
    double w = 0.0;
    for (std::size_t k = 0; k < order_.size(); ++k) {
      if (root_steps_[k] > 0.0) {
        w += root_steps_[k] * rng.normal();
      }
      values[order_[k]] = w;
    }
    const double w1 = w + root_last_step_ * rng.normal();
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = probes_[i] == 1.0 ? 0.0 : values[i] - probes_[i] * w1;
    }
    return values;
  }

private:
  std::vector<double> probes_;
  std::vector<std::size_t> order_;
  std::vector<double> root_steps_;
  double root_last_step_ = 1.0;
};

// B(t) = W(t) - t W(1) on a strictly increasing grid inside [0, 1].
inline BridgePath simulate_bridge(std::span<const double> grid, RngStream &rng) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw std::invalid_argument("simulate_bridge: grid must be strictly increasing");
    }
  }
  BridgeSampler sampler({grid.begin(), grid.end()});
  BridgePath path{{grid.begin(), grid.end()}, sampler.sample(rng), rng.master_seed(),
                  rng.stream_id()};
  return path;
}

inline BridgePath simulate_bridge(std::span<const double> grid, std::uint64_t seed,
                                  std::uint64_t stream) {
  RngStream rng(seed, stream);
  return simulate_bridge(grid, rng);
}

// Truncation and resolution for the functional  I = int_0^inf B(F(s)) ds.
struct LimitProcessSpec {
  GammaKernel kernel{1};
  double integral_truncation = 0.0;  // T_max with 1 - F(T_max) < tail_mass
  std::size_t quadrature_resolution = 2048;

  static LimitProcessSpec make(const GammaKernel &kernel, std::size_t resolution = 2048,
                               double tail_mass = 1e-8) {
    if (resolution < 2) {
      throw std::invalid_argument("LimitProcessSpec: resolution must be >= 2");
    }
    double t_max = kernel.quantile(1.0 - tail_mass);
    while (kernel.survival(t_max) >= tail_mass) {
      t_max *= 1.001;
    }
    return {kernel, t_max, resolution};
  }

  std::vector<double> quadrature_nodes() const {
    return linear_grid(0.0, integral_truncation, quadrature_resolution + 1);
  }
};

// Trapezoidal value of int_0^{T_max} B(F(s)) ds from a bridge evaluated at
// the quadrature nodes (x-domain path). Also equals -int t dB(F(t)).
inline double bridge_integral(const BridgePath &x_domain_path, const LimitProcessSpec &spec) {
  if (x_domain_path.grid.size() != spec.quadrature_resolution + 1 ||
      x_domain_path.grid.back() != spec.integral_truncation) {
    throw std::invalid_argument("bridge_integral: path is not sampled at the quadrature nodes");
  }
  return trapezoid(x_domain_path.grid, x_domain_path.values);
}

// One bridge path seen on a t-grid, at the quadrature nodes through F, and
// on an x-grid through F, together with its integral functional.
struct JointBridge {
  BridgePath on_t_grid;
  BridgePath on_quadrature;  // grid = nodes s_k, values = B(F(s_k))
  std::vector<double> on_x_grid;  // B(F(x_j))
  double integral = 0.0;
};

// The limit processes
//   W*(t) = B(t) - phi_m(t) / m * I
//   V*(x) = B(F(x)) - x f(x) / m * I
// built from one shared bridge, with I = int_0^inf B(F(y)) dy.
class LimitModel {
public:
  LimitModel(const GammaKernel &kernel, std::vector<double> t_grid, std::vector<double> x_grid,
             std::size_t quadrature_resolution = 2048)
      : spec_(LimitProcessSpec::make(kernel, quadrature_resolution)), t_grid_(std::move(t_grid)),
        x_grid_(std::move(x_grid)), nodes_(spec_.quadrature_nodes()),
        sampler_(collect_probes(kernel)) {
    const double m = static_cast<double>(kernel.m());
    phi_over_m_.resize(t_grid_.size());
    for (std::size_t j = 0; j < t_grid_.size(); ++j) {
      phi_over_m_[j] = t_grid_[j] >= 1.0 ? 0.0 : kernel.phi(t_grid_[j]) / m;
    }
    xf_over_m_.resize(x_grid_.size());
    for (std::size_t j = 0; j < x_grid_.size(); ++j) {
      xf_over_m_[j] = x_grid_[j] * kernel.pdf(x_grid_[j]) / m;
    }
  }

  const LimitProcessSpec &spec() const { return spec_; }
  std::span<const double> t_grid() const { return t_grid_; }
  std::span<const double> x_grid() const { return x_grid_; }

  JointBridge simulate(RngStream &rng) const {
    const std::vector<double> values = sampler_.sample(rng);
    const std::size_t nt = t_grid_.size();
    const std::size_t nq = nodes_.size();
    JointBridge joint;
    joint.on_t_grid = {t_grid_, {values.begin(), values.begin() + nt}, rng.master_seed(),
                       rng.stream_id()};
    joint.on_quadrature = {nodes_,
                           {values.begin() + nt, values.begin() + nt + nq},
                           rng.master_seed(),
                           rng.stream_id()};
    joint.on_x_grid.assign(values.begin() + nt + nq, values.end());
    joint.integral = bridge_integral(joint.on_quadrature, spec_);
    return joint;
  }

  ProcessPath limit_W(const JointBridge &joint) const {
    ProcessPath path{PathKind::limit_W, spec_.kernel.m(), 0, 0, t_grid_, {}};
    path.values.resize(t_grid_.size());
    for (std::size_t j = 0; j < t_grid_.size(); ++j) {
      path.values[j] = joint.on_t_grid.values[j] - phi_over_m_[j] * joint.integral;
    }
    return path;
  }

  ProcessPath limit_V(const JointBridge &joint) const {
    ProcessPath path{PathKind::limit_V, spec_.kernel.m(), 0, 0, x_grid_, {}};
    path.values.resize(x_grid_.size());
    for (std::size_t j = 0; j < x_grid_.size(); ++j) {
      path.values[j] = joint.on_x_grid[j] - xf_over_m_[j] * joint.integral;
    }
    return path;
  }

private:
  std::vector<double> collect_probes(const GammaKernel &kernel) const {
    std::vector<double> probes(t_grid_);
    for (double s : nodes_) {
      probes.push_back(kernel.cdf(s));
    }
    for (double x : x_grid_) {
      if (!(x >= 0.0)) {
        throw std::domain_error("LimitModel: x-grid must be nonnegative");
      }
      probes.push_back(kernel.cdf(x));
    }
    return probes;
  }

  LimitProcessSpec spec_;
  std::vector<double> t_grid_;
  std::vector<double> x_grid_;
  std::vector<double> nodes_;
  BridgeSampler sampler_;
  std::vector<double> phi_over_m_;
  std::vector<double> xf_over_m_;
};

// E W*(t) W*(s) = min(t, s) - t s - phi_m(t) phi_m(s) / m.
inline double covariance_W(const GammaKernel &kernel, double t, double s) {
  const auto phi = [&](double u) { return u >= 1.0 ? 0.0 : kernel.phi(u); };
  return std::min(t, s) - t * s - phi(t) * phi(s) / static_cast<double>(kernel.m());
}

// E V*(x) V*(y) = min(F(x), F(y)) - F(x) F(y) - x y f(x) f(y) / m.
inline double covariance_V(const GammaKernel &kernel, double x, double y) {
  const double fx = kernel.cdf(x);
  const double fy = kernel.cdf(y);
  return std::min(fx, fy) - fx * fy -
         x * y * kernel.pdf(x) * kernel.pdf(y) / static_cast<double>(kernel.m());
}

// int_0^inf (min(t, F(s)) - t F(s)) ds = Cov(B(t), I), by adaptive
// Gauss-Kronrod split at the kink s = Q(t). Equals phi_m(t).
inline double score_by_quadrature(const GammaKernel &kernel, double t) {
  using boost::math::quadrature::gauss_kronrod;
  if (!(t >= 0.0 && t < 1.0)) {
    throw std::domain_error("score_by_quadrature: t must lie in [0, 1)");
  }
  const auto integrand = [&](double s) {
    const double f = kernel.cdf(s);
    return std::min(t, f) - t * f;
  };
  const double kink = kernel.quantile(t);
  double value = gauss_kronrod<double, 61>::integrate(
      integrand, kink, std::numeric_limits<double>::infinity(), 15, 1e-13);
  if (kink > 0) {
    value += gauss_kronrod<double, 61>::integrate(integrand, 0.0, kink, 15, 1e-13);
  }
  return value;
}

// sigma_1^2 = Var I = int int (F(x ^ y) - F(x) F(y)) dx dy
//           = 2 int_0^inf (1 - F(y)) int_0^y F(x) dx dy.
inline double bridge_integral_variance_by_quadrature(const GammaKernel &kernel) {
  using boost::math::quadrature::gauss_kronrod;
  const auto inner = [&](double y) {
    if (y <= 0) {
      return 0.0;
    }
    const auto cdf = [&](double x) { return kernel.cdf(x); };
    return kernel.survival(y) * gauss_kronrod<double, 31>::integrate(cdf, 0.0, y, 10, 1e-13);
  };
  const double split = static_cast<double>(kernel.m());
  return 2.0 * (gauss_kronrod<double, 31>::integrate(inner, 0.0, split, 10, 1e-12) +
                gauss_kronrod<double, 31>::integrate(
                    inner, split, std::numeric_limits<double>::infinity(), 10, 1e-12));
}

// Fraction of simulated Wiener paths on [0, T] (grid of `steps` increments)
// whose modulus sup_{s <= T-h} sup_{u <= h} |W(s+u) - W(s)| reaches v sqrt(h).
inline double modulus_exceedance_frequency(double T, double h, double v, std::size_t steps,
                                           std::size_t paths, std::uint64_t seed) {
  if (!(T > 0 && h > 0 && h < T) || steps < 2) {
    throw std::invalid_argument("modulus_exceedance_frequency: need 0 < h < T and steps >= 2");
  }
  const double dt = T / static_cast<double>(steps);
  const auto window = static_cast<std::size_t>(std::llround(h / dt));
  const double level = v * std::sqrt(h);
  std::size_t exceed = 0;
  std::vector<double> w(steps + 1);
  for (std::size_t p = 0; p < paths; ++p) {
    RngStream rng(seed, p);
    w[0] = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
      w[k] = w[k - 1] + std::sqrt(dt) * rng.normal();
    }
    // Sliding max/min of w over [s, s + window].
    std::deque<std::size_t> hi, lo;
    double modulus = 0.0;
    std::size_t right = 0;
    for (std::size_t s = 0; s + window <= steps; ++s) {
      while (right <= s + window) {
        while (!hi.empty() && w[hi.back()] <= w[right]) hi.pop_back();
        while (!lo.empty() && w[lo.back()] >= w[right]) lo.pop_back();
        hi.push_back(right);
        lo.push_back(right);
        ++right;
      }
      while (hi.front() < s) hi.pop_front();
      while (lo.front() < s) lo.pop_front();
      modulus = std::max({modulus, w[hi.front()] - w[s], w[s] - w[lo.front()]});
    }
    if (modulus >= level) {
      ++exceed;
    }
  }
  return static_cast<double>(exceed) / static_cast<double>(paths);
}

} // namespace mspacings
