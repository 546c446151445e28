#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mspacings/cli_io.hpp"

using namespace mspacings;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / "mspacings_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path &p, const std::string &text) {
  std::ofstream(p) << text;
}

int run_cli(const std::string &args) {
  const std::string cmd = std::string(MSPACINGS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

} // namespace

TEST(Config, ParsesKeyValueText) {
  const auto s = parse_config_text("# comment\nm = 2\n  seed=7  # trailing\n\nN-ladder = 8,16\n");
  EXPECT_EQ(s.at("m"), "2");
  EXPECT_EQ(s.at("seed"), "7");
  EXPECT_EQ(s.at("N-ladder"), "8,16");
  EXPECT_THROW(parse_config_text("m 2\n"), std::invalid_argument);
  EXPECT_THROW(parse_config_text("m =\n"), std::invalid_argument);
}

TEST(Config, Precedence) {
  const Settings file{{"m", "3"}, {"seed", "11"}, {"a", "0.5"}};
  const Settings flags{{"m", "2"}};
  const auto c = resolve_config("rate-scan", {{"kind", "tn"}, {"m", "2"}}, file, "99");
  EXPECT_EQ(c.m, 2);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_DOUBLE_EQ(c.a, 0.5);
  const auto env_only = resolve_config("rate-scan", {{"kind", "tn"}}, {}, "99");
  EXPECT_EQ(env_only.seed, 99u);
  const auto defaults = resolve_config("rate-scan", {{"kind", "tn"}}, {});
  EXPECT_EQ(defaults.seed, kDefaultSeed);
  EXPECT_EQ(defaults.m, 1);
  (void)flags;
}

TEST(Config, Invalid) {
  EXPECT_THROW(resolve_config("nope", {}, {}), std::invalid_argument);
  EXPECT_THROW(resolve_config("rate-scan", {}, {}), std::invalid_argument);
  EXPECT_THROW(resolve_config("rate-scan", {{"kind", "tn"}, {"m", "0"}}, {}), std::invalid_argument);
  EXPECT_THROW(resolve_config("rate-scan", {{"kind", "tn"}, {"a", "1.5"}}, {}), std::invalid_argument);
  EXPECT_THROW(resolve_config("rate-scan", {{"kind", "tn"}, {"m", "x"}}, {}), std::invalid_argument);
  EXPECT_THROW(resolve_config("rate-scan", {{"kind", "tn"}, {"N-ladder", "8,4"}}, {}),
               std::invalid_argument);
  EXPECT_THROW(resolve_config("simulate", {{"format", "xml"}}, {}), std::invalid_argument);
  EXPECT_THROW(resolve_config("simulate", {{"bogus", "1"}}, {}), std::invalid_argument);
  EXPECT_THROW(resolve_config("gof-test", {}, {}), std::invalid_argument);
}

TEST(Run, RateScanJsonHasSlope) {
  auto c = resolve_config("rate-scan", {{"kind", "tn"}, {"reps", "50"}}, {});
  std::ostringstream out, err;
  const int code = run(c, out, err);
  EXPECT_LE(code, 1);
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_TRUE(j.contains("slope"));
  EXPECT_TRUE(j["slope"].contains("slope"));
}

TEST(Run, ByteIdenticalAcrossRunsAndWorkers) {
  auto c = resolve_config("limit-law", {{"N-ladder", "16,32,64,128"}, {"reps", "100"}, {"grid", "64"}}, {});
  const auto a = scratch("a.json"), b = scratch("b.json");
  c.out = a.string();
  c.workers = 1;
  run(c);
  c.out = b.string();
  c.workers = 4;
  run(c);
  EXPECT_EQ(read_text_file(a.string()), read_text_file(b.string()));
}

TEST(Run, InvalidRunLeavesNoFile) {
  const auto out = scratch("never.json");
  fs::remove(out);
  RunConfig c = resolve_config("gof-test", {{"data", scratch("missing.txt").string()}}, {});
  c.out = out.string();
  std::ostringstream o, e;
  EXPECT_EQ(run(c, o, e), 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_FALSE(e.str().empty());
}

TEST(Run, AtomicWriteReplacesTarget) {
  const auto p = scratch("atomic.txt");
  write_atomically(p.string(), "first\n");
  write_atomically(p.string(), "second\n");
  EXPECT_EQ(read_text_file(p.string()), "second\n");
  EXPECT_FALSE(fs::exists(p.string() + ".tmp"));
}

TEST(Gof, DataValidation) {
  const auto p = scratch("bad.txt");
  write_file(p, "0.1\n1.5\n");
  EXPECT_THROW(read_data_file(p.string()), std::invalid_argument);
  const std::vector<double> few{0.2, 0.4, 0.6};
  EXPECT_THROW(gof_statistic(few, 2, 0.9), std::invalid_argument);
  EXPECT_NO_THROW(gof_statistic(std::vector<double>{0.2, 0.4, 0.6, 0.8}, 2, 0.9));
}

TEST(Gof, PValueConventions) {
  const auto table = simulate_null_table(2, 0.9, 200, 5, 64);
  EXPECT_DOUBLE_EQ(table.p_value(0.0), 1.0);
  EXPECT_DOUBLE_EQ(table.p_value(1e9), 1.0 / 201.0);
  double prev = 1.0;
  for (double s : linear_grid(0.0, 3.0, 50)) {
    const double p = table.p_value(s);
    EXPECT_LE(p, prev);
    EXPECT_GT(p, 0.0);
    prev = p;
  }
}

TEST(Gof, EquispacedDataRejected) {
  std::vector<double> data;
  for (int i = 1; i < 1000; ++i) {
    data.push_back(i / 1000.0);
  }
  const auto r = gof_test(data, 2, 0.9, 500, 3);
  EXPECT_TRUE(r.reject);
  EXPECT_LE(r.p_value, 0.01);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("identity-check --m 2 --n 41 --reps 5"), 0);
  EXPECT_EQ(run_cli("rate-scan"), 2);
  EXPECT_EQ(run_cli("rate-scan --kind tn --m -1"), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
  const auto cfg = scratch("bad.cfg");
  write_file(cfg, "this is not a config\n");
  const auto out = scratch("cli_out.json");
  fs::remove(out);
  EXPECT_EQ(run_cli("simulate --config " + cfg.string() + " --out " + out.string()), 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, ConfigFileAndFlagOverride) {
  const auto cfg = scratch("ok.cfg");
  write_file(cfg, "m = 3\nn = 30\ngrid = 8\nformat = csv\nprocess = gamma\n");
  const auto out = scratch("sim.csv");
  EXPECT_EQ(run_cli("simulate --config " + cfg.string() + " --grid 4 --out " + out.string()), 0);
  const auto text = read_text_file(out.string());
  EXPECT_EQ(text.rfind("grid,value\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}
