#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mspacings {

enum class PathKind {
  alpha,
  gamma,
  beta,
  kappa,
  uniform_quantile,
  bridge,
  limit_W,
  limit_V,
};

inline std::string_view to_string(PathKind kind) {
  switch (kind) {
  case PathKind::alpha: return "alpha";
  case PathKind::gamma: return "gamma";
  case PathKind::beta: return "beta";
  case PathKind::kappa: return "kappa";
  case PathKind::uniform_quantile: return "uniform_quantile";
  case PathKind::bridge: return "bridge";
  case PathKind::limit_W: return "limit_W";
  case PathKind::limit_V: return "limit_V";
  }
  return "unknown";
}

// A function sampled on a grid: the common carrier for every process in the
// library. n and N are zero for processes not tied to a sample.
struct ProcessPath {
  PathKind kind = PathKind::alpha;
  int m = 0;
  std::size_t n = 0;
  std::size_t N = 0;
  std::vector<double> grid;
  std::vector<double> values;

  void validate() const {
    if (grid.size() != values.size()) {
      throw std::logic_error("ProcessPath: grid and values differ in length");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!std::isfinite(values[i]) || !std::isfinite(grid[i])) {
        throw std::logic_error("ProcessPath: non-finite entry");
      }
      if (i > 0 && !(grid[i] > grid[i - 1])) {
        throw std::logic_error("ProcessPath: grid must be strictly increasing");
      }
    }
  }

  double sup_abs() const {
    double s = 0.0;
    for (double v : values) {
      s = std::max(s, std::abs(v));
    }
    return s;
  }
};

inline std::string format_double(double x) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", x);
  return buffer;
}

inline std::string to_csv(const ProcessPath &path) {
  std::string out = "grid,value\n";
  for (std::size_t i = 0; i < path.grid.size(); ++i) {
    out += format_double(path.grid[i]);
    out += ',';
    out += format_double(path.values[i]);
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json to_json(const ProcessPath &path) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(path.kind));
  j["m"] = path.m;
  j["n"] = path.n;
  j["N"] = path.N;
  j["grid"] = path.grid;
  j["values"] = path.values;
  return j;
}

// Largest pointwise |a - b| between two paths on the same grid.
inline double max_discrepancy(const ProcessPath &a, const ProcessPath &b) {
  if (a.grid != b.grid) {
    throw std::invalid_argument("max_discrepancy: paths live on different grids");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    d = std::max(d, std::abs(a.values[i] - b.values[i]));
  }
  return d;
}

} // namespace mspacings
