#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pemlab/app.h"
#include "pemlab/config.h"
#include "pemlab/error.h"

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::optional<std::string> out_dir;
  std::optional<std::string> family;
  std::optional<std::string> slope;
  std::optional<std::string> window;
  std::optional<std::string> grid;
  std::optional<std::string> obs;
  std::optional<std::string> n;
  std::optional<std::string> samples;
  std::optional<std::string> a;
  std::vector<std::string> sets;
  bool no_wall_clock = false;
};

void add_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config_path, "Configuration file (dotted key = value lines)");
  cmd.add_option("--seed", f.seed, "Master seed (experiment.seed)");
  cmd.add_option("--threads", f.threads, "Worker threads; 0 uses every core");
  cmd.add_option("--out-dir", f.out_dir, "Output directory (output.dir)");
  cmd.add_option("--family", f.family, "family.kind: tent, beta, markov or doubling");
  cmd.add_option("--slope,--base", f.slope, "family.base");
  cmd.add_option("--window", f.window, "family.window");
  cmd.add_option("--grid", f.grid, "solver.grid_count");
  cmd.add_option("--obs", f.obs, "observable.preset");
  cmd.add_option("--n", f.n, "experiment.n");
  cmd.add_option("--samples", f.samples, "experiment.samples");
  cmd.add_option("--a", f.a, "experiment.a");
  cmd.add_option("--set", f.sets, "Override any field: --set key=value")->take_all();
  cmd.add_flag("--no-wall-clock", f.no_wall_clock, "Leave the wall-clock field out of reports");
}

pemlab::RunConfig build_config(const Flags& f) {
  pemlab::RunConfig config;
  if (!f.config_path.empty()) config = pemlab::RunConfig::load(f.config_path);
  const auto put = [&](const char* key, const std::optional<std::string>& v) {
    if (v) config.set(key, *v);
  };
  put("family.kind", f.family);
  put("family.base", f.slope);
  put("family.window", f.window);
  put("solver.grid_count", f.grid);
  put("observable.preset", f.obs);
  put("experiment.n", f.n);
  put("experiment.samples", f.samples);
  put("experiment.a", f.a);
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw pemlab::ConfigError("--set " + s + ": expected key=value");
    config.set(s.substr(0, eq), s.substr(eq + 1));
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parameter-space limit theorem experiments for piecewise expanding maps"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<std::string> names(std::begin(pemlab::kExperimentKinds),
                                 std::end(pemlab::kExperimentKinds));
  names.push_back("all");
  names.push_back("validate");
  for (const auto& name : names) add_flags(*app.add_subcommand(name), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pemlab::kExitConfig;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  pemlab::RunConfig config;
  try {
    config = build_config(flags);
  } catch (const pemlab::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pemlab::kExitConfig;
  }
  if (sub == "validate") return pemlab::validate(config, std::cout, std::cerr);

  pemlab::RunOptions options;
  options.seed = flags.seed;
  options.out_dir = flags.out_dir;
  options.threads = flags.threads;
  options.include_wall_clock = !flags.no_wall_clock;
  return pemlab::run(sub, config, options, std::cout, std::cerr);
}
