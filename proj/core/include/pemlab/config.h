#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pemlab/asip.h"
#include "pemlab/maps.h"
#include "pemlab/transfer.h"
#include "pemlab/valpha.h"

namespace pemlab {

// Experiment kinds understood by the run configuration; the names match the
// CLI subcommands.
inline constexpr std::string_view kExperimentKinds[] = {
    "density", "correlations", "variance", "transversality", "partition",
    "clt",     "lil",          "blocks",   "erdos-fortet",   "typicality"};

bool is_experiment_kind(std::string_view kind);

// Flat dotted-key configuration, e.g.
//
//   family.kind = tent
//   family.base = 1.9
//   experiment.n = 20000
//
// Lines are `key = value`; `#` starts a comment. Values are kept as text and
// normalised when the configuration is resolved.
class RunConfig {
 public:
  static RunConfig parse(std::string_view text, std::string origin = "<config>");
  static RunConfig load(const std::filesystem::path& path);

  // Sets (or replaces) a key, e.g. from a command-line override.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Fills every default for the given experiment kind (experiment.kind when
  // empty) and normalises all values. Throws ConfigError naming the field.
  RunConfig resolved(std::string_view kind = {}) const;

  // Sorted `key = value` lines; stable under parse/serialize round trips.
  std::string serialize() const;
  // First 8 hex digits of the FNV-1a hash of the serialization, leaving out
  // the seed and the output block.
  std::string hash8() const;

  std::string text(const std::string& key) const;
  double real(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t seed() const;
  std::string kind() const { return text("experiment.kind"); }

  // Typed views of a resolved configuration.
  MapFamily family() const;
  Observable observable() const;
  SolverOptions solver() const;
  NormalizerOptions normalizer() const;
  std::vector<std::string> output_formats() const;

 private:
  std::string where(const std::string& key) const;

  std::map<std::string, std::string> entries_;
  std::map<std::string, std::size_t> lines_;
  std::string origin_ = "<config>";
};

// Parses observable term lists such as "cos:1:1.0,cos:2:1.0". Forms:
// const:c, linear:c, cos:k:c, sin:k:c, ind:p:q:c, bump:center:exponent:c
// (the trailing coefficient may be omitted and defaults to 1).
std::vector<Term> parse_terms(std::string_view text);

}  // namespace pemlab
