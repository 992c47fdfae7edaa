#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pemlab/asip.h"
#include "pemlab/config.h"
#include "pemlab/parallel.h"

namespace pemlab {

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2, kExitDomain = 3 };

struct RunOptions {
  std::optional<std::uint64_t> seed;     // replaces experiment.seed
  std::optional<std::string> out_dir;    // replaces output.dir
  unsigned threads = 0;                  // 0: all available cores
  bool include_wall_clock = true;
};

// Runs one experiment kind against a resolved copy of `config` and returns the
// report. No files are written.
ExperimentReport run_experiment(std::string_view kind, const RunConfig& config,
                                const Executor& executor);

// CLI entry for a subcommand (an experiment kind or "all"). Writes
// <kind>-<hash8>-<seed>.json/.csv into the output directory and prints one
// summary line per experiment to `out`. Errors go to `err`.
int run(std::string_view subcommand, const RunConfig& config, const RunOptions& options,
        std::ostream& out, std::ostream& err);

// Prints the fully defaulted configuration.
int validate(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace pemlab
