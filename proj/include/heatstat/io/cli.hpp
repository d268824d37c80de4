#pragma once

// Argument parsing for `heatstat <subcommand> --config <path> --out <dir>
// [--seed N] [--threads N]`.

#include <ostream>
#include <string>

#include "CLI11.hpp"
#include "heatstat/io/commands.hpp"

namespace heatstat::io {

inline int run_cli(int argc, const char* const* argv, std::ostream& os, std::ostream& err) {
  CLI::App app{"heatstat: heat statistics under repeated projective measurements"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RunOptions opt;
  long long seed = -1;
  struct Entry {
    const char* name;
    const char* help;
  };
  const Entry entries[] = {
      {"exact", "exact heat distribution, characteristic function and moments"},
      {"sample", "Monte Carlo trajectories, empirical histogram, Jarzynski estimator"},
      {"thermalize", "block structure, convergence profile and regime"},
      {"zeno", "escape probability against M and log-log slope"},
      {"fig1", "effective inverse temperature sweep of the three-level ensemble"},
      {"validate", "cheap invariant suite; nonzero exit on failure"},
  };
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--config", opt.config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--seed", seed, "Monte Carlo seed (overrides config)")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", opt.threads, "worker threads (default: HEATSTAT_THREADS, else all cores)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, os, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, os, err);
  } catch (const CLI::ParseError& e) {
    write_error_json(err, "UsageError", "Usage", "", e.what());
    return kConfigInvalid;
  }
  if (seed >= 0) opt.seed = static_cast<std::uint64_t>(seed);
  return run_command(app.get_subcommands().front()->get_name(), opt, os, err);
}

}  // namespace heatstat::io
