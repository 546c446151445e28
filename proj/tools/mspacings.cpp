#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mspacings/cli_io.hpp"

namespace {

struct FlagSpec {
  const char *name;
  const char *help;
};

const std::vector<FlagSpec> kFlags{
    {"m", "spacing order"},
    {"n", "sample size"},
    {"N-ladder", "comma-separated increasing N values"},
    {"a", "domain cutoff in (0, 1]"},
    {"grid", "grid resolution"},
    {"reps", "replications (null replications for gof-test, seeds for identity-check)"},
    {"seed", "master seed"},
    {"level", "test level for gof-test"},
    {"workers", "worker threads (0 = all cores); does not change results"},
    {"out", "output path (default: standard output)"},
    {"format", "csv or json"},
    {"data", "data file for gof-test, one value per line"},
    {"kind", "rate-scan statistic: tn, rn or kappa"},
    {"side", "limit-law side: alpha or gamma"},
    {"process", "simulate: alpha, gamma, beta, kappa, W or V"},
};

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"m-spacings processes: simulation, identities, rate scans and goodness of fit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> values(kFlags.size());
  std::vector<CLI::Option *> options;
  for (std::size_t i = 0; i < kFlags.size(); ++i) {
    options.push_back(app.add_option(std::string("--") + kFlags[i].name, values[i], kFlags[i].help));
  }
  app.add_option("--config", config_path, "key = value config file");
  for (const auto &command : mspacings::known_commands()) {
    app.add_subcommand(command)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  mspacings::RunConfig config;
  try {
    mspacings::Settings flags;
    for (std::size_t i = 0; i < kFlags.size(); ++i) {
      if (options[i]->count() > 0) {
        flags[kFlags[i].name] = values[i];
      }
    }
    const mspacings::Settings file =
        config_path.empty() ? mspacings::Settings{} : mspacings::parse_config_file(config_path);
    std::optional<std::string> env_seed;
    if (const char *s = std::getenv("MSPACINGS_SEED")) {
      env_seed = s;
    }
    config = mspacings::resolve_config(app.get_subcommands().front()->get_name(), flags, file,
                                       env_seed);
  } catch (const std::exception &e) {
    std::cerr << "mspacings: " << e.what() << '\n';
    return 2;
  }
  return mspacings::run(config);
}
