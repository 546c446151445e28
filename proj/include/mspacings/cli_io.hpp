#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mspacings/gof.hpp"
#include "mspacings/pyke.hpp"
#include "mspacings/rate_lab.hpp"

namespace mspacings {

// Raw key -> value settings, from flags or from a config file. Keys are the
// long flag names without dashes ("m", "N-ladder", "seed", ...).
using Settings = std::map<std::string, std::string>;

inline constexpr std::uint64_t kDefaultSeed = 20240607;

struct RunConfig {
  std::string command;
  std::string kind;     // rate-scan: tn | rn | kappa
  std::string side;     // limit-law: alpha | gamma
  std::string process;  // simulate: alpha | gamma | beta | kappa | W | V
  int m = 1;
  std::size_t n = 0;  // 0: command default
  std::vector<std::size_t> N_ladder;
  double a = 0.9;
  std::size_t grid = 512;
  std::size_t reps = 0;  // 0: command default
  std::uint64_t seed = kDefaultSeed;
  double level = 0.05;
  unsigned workers = 0;
  std::string out;  // empty: standard output
  std::string format = "json";
  std::string data;
};

inline std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    return "";
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// key = value lines; '#' starts a comment.
inline Settings parse_config_text(const std::string &text) {
  Settings settings;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key or value");
    }
    settings[key] = value;
  }
  return settings;
}

inline std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline Settings parse_config_file(const std::string &path) {
  return parse_config_text(read_text_file(path));
}

namespace detail {

template <class T> T parse_number(const std::string &key, const std::string &text) {
  T value{};
  const char *begin = text.data();
  const char *end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("invalid value for " + key + ": '" + text + "'");
  }
  return value;
}

// from_chars for double is missing from older standard libraries.
inline double parse_real(const std::string &key, const std::string &text) {
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception &) {
    throw std::invalid_argument("invalid value for " + key + ": '" + text + "'");
  }
  if (used != text.size()) {
    throw std::invalid_argument("invalid value for " + key + ": '" + text + "'");
  }
  return value;
}

inline std::vector<std::size_t> parse_ladder(const std::string &text) {
  std::vector<std::size_t> ladder;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    ladder.push_back(parse_number<std::size_t>("N-ladder", trim(item)));
  }
  return ladder;
}

} // namespace detail

inline const std::vector<std::string> &known_commands() {
  static const std::vector<std::string> commands{"simulate",         "identity-check", "rate-scan",
                                                 "covariance-check", "limit-law",      "gof-test",
                                                 "finite-n"};
  return commands;
}

// Flags override the config file, which overrides MSPACINGS_SEED (seed
// only), which overrides built-in defaults.
inline RunConfig resolve_config(const std::string &command, const Settings &flags,
                                const Settings &file, std::optional<std::string> env_seed = {}) {
  if (std::find(known_commands().begin(), known_commands().end(), command) ==
      known_commands().end()) {
    throw std::invalid_argument("unknown command '" + command + "'");
  }
  Settings merged = file;
  for (const auto &[key, value] : flags) {
    merged[key] = value;
  }
  if (env_seed && !merged.count("seed")) {
    merged["seed"] = *env_seed;
  }

  RunConfig c;
  c.command = command;
  for (const auto &[key, value] : merged) {
    if (key == "m") {
      c.m = detail::parse_number<int>(key, value);
    } else if (key == "n") {
      c.n = detail::parse_number<std::size_t>(key, value);
    } else if (key == "N-ladder") {
      c.N_ladder = detail::parse_ladder(value);
    } else if (key == "a") {
      c.a = detail::parse_real(key, value);
    } else if (key == "grid") {
      c.grid = detail::parse_number<std::size_t>(key, value);
    } else if (key == "reps") {
      c.reps = detail::parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
      c.seed = detail::parse_number<std::uint64_t>(key, value);
    } else if (key == "level") {
      c.level = detail::parse_real(key, value);
    } else if (key == "workers") {
      c.workers = detail::parse_number<unsigned>(key, value);
    } else if (key == "out") {
      c.out = value;
    } else if (key == "format") {
      c.format = value;
    } else if (key == "data") {
      c.data = value;
    } else if (key == "kind") {
      c.kind = value;
    } else if (key == "side") {
      c.side = value;
    } else if (key == "process") {
      c.process = value;
    } else {
      throw std::invalid_argument("unknown setting '" + key + "'");
    }
  }

  if (c.m < 1) {
    throw std::invalid_argument("m must be positive");
  }
  if (merged.count("n") && c.n == 0) {
    throw std::invalid_argument("n must be positive");
  }
  if (merged.count("reps") && c.reps == 0) {
    throw std::invalid_argument("reps must be positive");
  }
  if (c.grid < 2) {
    throw std::invalid_argument("grid must be >= 2");
  }
  if (!(c.a > 0.0 && c.a <= 1.0)) {
    throw std::invalid_argument("a must lie in (0, 1]");
  }
  if (!(c.level > 0.0 && c.level < 1.0)) {
    throw std::invalid_argument("level must lie in (0, 1)");
  }
  if (c.format != "json" && c.format != "csv") {
    throw std::invalid_argument("format must be csv or json");
  }
  for (std::size_t i = 0; i < c.N_ladder.size(); ++i) {
    if (c.N_ladder[i] == 0 || (i > 0 && c.N_ladder[i] <= c.N_ladder[i - 1])) {
      throw std::invalid_argument("N-ladder must be positive and strictly increasing");
    }
  }
  if (command == "rate-scan" && c.kind != "tn" && c.kind != "rn" && c.kind != "kappa") {
    throw std::invalid_argument("rate-scan needs --kind tn|rn|kappa");
  }
  if (command == "limit-law") {
    if (c.side.empty()) {
      c.side = "alpha";
    }
    if (c.side != "alpha" && c.side != "gamma") {
      throw std::invalid_argument("limit-law --side must be alpha or gamma");
    }
  }
  if (command == "simulate") {
    if (c.process.empty()) {
      c.process = "alpha";
    }
    static const std::vector<std::string> processes{"alpha", "gamma", "beta", "kappa", "W", "V"};
    if (std::find(processes.begin(), processes.end(), c.process) == processes.end()) {
      throw std::invalid_argument("simulate --process must be alpha|gamma|beta|kappa|W|V");
    }
  }
  if (command == "gof-test" && c.data.empty()) {
    throw std::invalid_argument("gof-test needs --data <path>");
  }
  return c;
}

// One real per line; blank lines and '#' comments are skipped.
inline std::vector<double> read_data_file(const std::string &path) {
  std::istringstream in(read_text_file(path));
  std::vector<double> data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const double v = detail::parse_real("data line " + std::to_string(line_no), line);
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("data line " + std::to_string(line_no) + ": value outside [0, 1]");
    }
    data.push_back(v);
  }
  return data;
}

// Writes to a sibling temporary file and renames it over the target, so a
// failed run never leaves partial output.
inline void write_atomically(const std::string &path, const std::string &contents) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out << contents;
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, target);
}

struct RunResult {
  int exit_code = 0;  // 0 pass, 1 fail
  std::string output;
};

namespace detail {

inline std::string render(const nlohmann::ordered_json &j) { return j.dump(2) + "\n"; }

inline std::vector<std::size_t> ladder_or(const RunConfig &c, std::vector<std::size_t> fallback) {
  return c.N_ladder.empty() ? std::move(fallback) : c.N_ladder;
}

inline ExperimentPlan base_plan(const RunConfig &c, ExperimentKind kind) {
  ExperimentPlan plan;
  plan.kind = kind;
  plan.m = c.m;
  plan.a = c.a;
  plan.grid_points = c.grid;
  plan.seed = c.seed;
  plan.workers = c.workers;
  return plan;
}

inline RunResult render_report(const RunConfig &c, const ExperimentReport &report) {
  return {report.passed() ? 0 : 1, c.format == "json" ? render(to_json(report)) : to_csv(report)};
}

inline RunResult run_simulate(const RunConfig &c) {
  const GammaKernel kernel(c.m);
  const std::size_t n = c.n == 0 ? static_cast<std::size_t>(c.m) * 1024 : c.n;
  RngStream rng(c.seed, 0);
  const auto t_grid = default_t_grid(c.a, c.grid);
  const auto x_grid = default_x_grid(kernel, c.a, c.grid);
  ProcessPath path;
  if (c.process == "alpha" || c.process == "gamma") {
    const SpacingsSet set = compute_spacings(SortedUniformSample::draw(n, rng), c.m);
    path = c.process == "alpha" ? alpha_process(set, x_grid, kernel)
                                : gamma_process(order_spacings(set), t_grid, kernel);
  } else if (c.process == "beta" || c.process == "kappa") {
    const ExponentialBlock block = sample_block(n, c.m, rng);
    path = c.process == "beta" ? beta_process(block, x_grid, kernel)
                               : kappa_process(block, t_grid, kernel);
  } else {
    const bool w = c.process == "W";
    const LimitModel model(kernel, w ? t_grid : std::vector<double>{},
                           w ? std::vector<double>{} : x_grid);
    const JointBridge joint = model.simulate(rng);
    path = w ? model.limit_W(joint) : model.limit_V(joint);
  }
  path.validate();
  return {0, c.format == "json" ? render(to_json(path)) : to_csv(path)};
}

// Assembled-versus-direct discrepancies of the representation identities
// over `reps` seeds.
inline RunResult run_identity_check(const RunConfig &c) {
  const GammaKernel kernel(c.m);
  const std::size_t reps = c.reps == 0 ? 100 : c.reps;
  const std::size_t n = c.n == 0 ? static_cast<std::size_t>(c.m) * 100 : c.n;
  const auto x_grid = make_cdf_grid(kernel, default_x_grid(kernel, c.a, c.grid));
  const auto t_grid = make_quantile_grid(kernel, default_t_grid(c.a, c.grid));
  const double tolerance = 1e-10;
  double worst_alpha = 0.0, worst_gamma = 0.0, worst_general = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const ExponentialBlock block = sample_block(n, c.m, c.seed, r);
    if (block.exact_multiple()) {
      worst_alpha = std::max(worst_alpha, alpha_via_representation(block, x_grid, kernel).max_discrepancy());
      worst_gamma = std::max(worst_gamma, gamma_via_representation(block, t_grid).max_discrepancy());
    }
    worst_general = std::max(worst_general, general_n_empirical(block, x_grid).max_discrepancy());
  }
  nlohmann::ordered_json j;
  j["m"] = c.m;
  j["n"] = n;
  j["N"] = n / static_cast<std::size_t>(c.m);
  j["seeds"] = reps;
  j["seed"] = c.seed;
  j["tolerance"] = tolerance;
  j["alpha_max_discrepancy"] = worst_alpha;
  j["gamma_max_discrepancy"] = worst_gamma;
  j["general_n_max_discrepancy"] = worst_general;
  const bool ok = worst_alpha <= tolerance && worst_gamma <= tolerance && worst_general <= tolerance;
  j["passed"] = ok;
  std::string text;
  if (c.format == "json") {
    text = render(j);
  } else {
    text = "identity,max_discrepancy\nalpha," + format_double(worst_alpha) + "\ngamma," +
           format_double(worst_gamma) + "\ngeneral_n," + format_double(worst_general) + "\n";
  }
  return {ok ? 0 : 1, text};
}

inline RunResult run_gof(const RunConfig &c) {
  const auto data = read_data_file(c.data);
  const GofResult r = gof_test(data, c.m, c.a, c.reps == 0 ? 2000 : c.reps, c.seed, c.level,
                               c.grid, c.workers);
  std::string text;
  if (c.format == "json") {
    text = render(to_json(r));
  } else {
    text = "statistic,n,N,null_reps,p_value,level,reject\n" + format_double(r.statistic) + ',' +
           std::to_string(r.n) + ',' + std::to_string(r.N) + ',' + std::to_string(r.null_reps) +
           ',' + format_double(r.p_value) + ',' + format_double(r.level) + ',' +
           (r.reject ? "1" : "0") + '\n';
  }
  return {r.reject ? 1 : 0, text};
}

} // namespace detail

// Runs the command and returns the rendered report; throws on invalid input.
inline RunResult execute(const RunConfig &c) {
  using detail::base_plan;
  if (c.command == "simulate") {
    return detail::run_simulate(c);
  }
  if (c.command == "identity-check") {
    return detail::run_identity_check(c);
  }
  if (c.command == "gof-test") {
    return detail::run_gof(c);
  }
  ExperimentPlan plan;
  if (c.command == "rate-scan") {
    plan = base_plan(c, c.kind == "tn"   ? ExperimentKind::rate_TN
                        : c.kind == "rn" ? ExperimentKind::rate_RN
                                         : ExperimentKind::rate_kappa_minus_UN);
    plan.N_ladder = detail::ladder_or(c, power_of_two_ladder(7, 13));
    plan.replications = c.reps == 0 ? 400 : c.reps;
  } else if (c.command == "limit-law") {
    plan = base_plan(c, c.side == "alpha" ? ExperimentKind::limit_law_alpha
                                          : ExperimentKind::limit_law_gamma);
    plan.N_ladder = detail::ladder_or(c, power_of_two_ladder(7, 13));
    plan.replications = c.reps == 0 ? 2000 : c.reps;
  } else if (c.command == "covariance-check") {
    plan = base_plan(c, ExperimentKind::covariance_check);
    plan.N_ladder = detail::ladder_or(c, {4096});
    plan.replications = c.reps == 0 ? 10000 : c.reps;
  } else if (c.command == "finite-n") {
    plan = base_plan(c, ExperimentKind::finite_n_law);
    plan.N_ladder = detail::ladder_or(c, {10, 20, 50, 100});
    plan.replications = c.reps == 0 ? 100000 : c.reps;
  } else {
    throw std::invalid_argument("unknown command '" + c.command + "'");
  }
  return detail::render_report(c, run_experiment(plan));
}

// Exit status: 0 pass, 1 fail, 2 invalid input or I/O error. Nothing is
// written to `out` unless the run completes.
inline int run(const RunConfig &c, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
  try {
    const RunResult result = execute(c);
    if (c.out.empty()) {
      out << result.output;
    } else {
      write_atomically(c.out, result.output);
    }
    return result.exit_code;
  } catch (const std::exception &e) {
    err << "mspacings: " << e.what() << '\n';
    return 2;
  }
}

} // namespace mspacings
