#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pemlab/maps.h"
#include "pemlab/parallel.h"
#include "pemlab/paramspace.h"
#include "pemlab/transfer.h"
#include "pemlab/valpha.h"

namespace pemlab {

enum class ExperimentKind { clt, lil, block_lln, variance_growth, erdos_fortet, typicality };
std::string_view to_string(ExperimentKind kind);

struct CsvTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(std::ostream& out, const CsvTable& table);

struct ExperimentReport {
  static constexpr int kSchema = 1;

  ExperimentKind kind = ExperimentKind::clt;
  std::string kind_label;  // replaces the kind name in JSON when set
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json statistics = nlohmann::json::object();
  bool verdict_applicable = true;
  bool pass = true;
  std::string verdict_note;
  double wall_clock_seconds = 0.0;
  std::vector<CsvTable> extracts;

  nlohmann::json to_json(bool include_wall_clock = true) const;
};

nlohmann::json describe_family(const MapFamily& family);

// Centering and scale for the process at one parameter.
struct Normalization {
  double mean = 0.0;
  double sigma = 1.0;
};

// Solves the invariant density at a; throws DegenerateObservableError when
// sigma_a(phi) vanishes.
Normalization solve_normalization(const MapFamily& family, const Observable& phi, double a,
                                  const SolverOptions& solver = {});

struct NormalizerOptions {
  SolverOptions solver;
  std::size_t sigma_grid = 64;
  std::size_t holdout = 8;
  double max_interpolation_error = 0.01;
};

// sigma_a(phi) (and the mean) over the admissible window, linearly interpolated
// from a uniform scan and checked at held-out parameters.
class ParameterNormalizer {
 public:
  static ParameterNormalizer build(const MapFamily& family, const Observable& phi,
                                   const NormalizerOptions& options,
                                   const Executor& executor = Executor::sequential());

  double sigma(double a) const;
  double mean(double a) const;
  Normalization interpolated(double a) const { return {mean(a), sigma(a)}; }
  // Mean solved exactly at a, sigma interpolated. Families constant in a reuse
  // the single solve.
  Normalization at(const MapFamily& family, const Observable& phi, double a) const;

  bool constant() const { return grid_.size() == 1; }
  double holdout_max_relative_error() const { return holdout_error_; }
  bool holdout_ok() const { return holdout_error_ < max_error_; }
  const SigmaScan& scan() const { return scan_; }
  const SolverOptions& solver() const { return solver_; }

 private:
  double interpolate(const std::vector<double>& values, double a) const;

  std::vector<double> grid_;
  SigmaScan scan_;
  SolverOptions solver_;
  double holdout_error_ = 0.0;
  double max_error_ = 0.01;
};

struct XiProcess {
  double a = 0.0;
  std::vector<double> values;  // xi_1 .. xi_n
  double sigma_a = 1.0;
  double mean_a = 0.0;
};

// Calls visit(x_i) for i = 1 .. n along the orbit of x_0(a). Families with
// exact dyadic orbits are followed through a binary expansion whose bits
// beyond double precision come from the (seed, stream) pair.
void walk_orbit(const MapFamily& family, double a, std::size_t n, std::uint64_t seed,
                std::uint64_t stream, const std::function<void(double)>& visit);

XiProcess xi_process(const MapFamily& family, const Observable& phi, double a, std::size_t n,
                     const Normalization& norm, std::uint64_t seed = 1, std::uint64_t stream = 0);
XiProcess xi_process(const MapFamily& family, const Observable& phi, double a, std::size_t n,
                     const SolverOptions& solver = {});

struct CltOptions {
  std::size_t n = 10000;
  std::size_t samples = 2000;
  std::uint64_t seed = 1;
  double ks_threshold = 0.05;
  std::size_t min_samples = 100;
  NormalizerOptions normalizer;
};

ExperimentReport clt_experiment(const MapFamily& family, const Observable& phi,
                                const CltOptions& options,
                                const Executor& executor = Executor::sequential());

struct LilOptions {
  std::size_t n_max = 1000000;
  std::size_t samples = 200;
  double checkpoint_base = 1.5;
  std::uint64_t seed = 1;
  double band_lo = 0.5;
  double band_hi = 1.5;
  double required_fraction = 0.9;
  NormalizerOptions normalizer;
};

inline constexpr std::size_t kLilFirstIndex = 16;

// Checkpoints ceil(base^k) that are >= 16 and <= n_max, plus n_max itself.
std::vector<std::size_t> lil_checkpoints(std::size_t n_max, double base);

// Running maximum of S_k / sqrt(2 k log log k) over 16 <= k, sampled at the
// checkpoints.
std::vector<double> lil_running_max(std::span<const double> xi,
                                    std::span<const std::size_t> checkpoints);

ExperimentReport lil_experiment(const MapFamily& family, const Observable& phi,
                                const LilOptions& options,
                                const Executor& executor = Executor::sequential());

struct VarianceGrowthOptions {
  std::size_t quadrature = 4096;
  std::uint64_t seed = 1;
  double eta = 1.0;
  NormalizerOptions normalizer;
};

struct VarianceGrowthResult {
  double value = 0.0;  // quadrature of E (xi_m + ... + xi_{m+n-1})^2
  std::size_t n = 0;
  std::size_t m = 0;
  bool in_range = true;  // 1 <= n <= eta m / 2
};

VarianceGrowthResult variance_growth(const MapFamily& family, const Observable& phi, std::size_t m,
                                     std::size_t n, const VarianceGrowthOptions& options = {},
                                     const Executor& executor = Executor::sequential());

struct Block {
  std::size_t first = 1;
  std::size_t size = 1;
  std::size_t last() const { return first + size - 1; }
};

struct BlockDecomposition {
  std::size_t N = 0;
  double delta_exponent = 0.3;
  std::vector<Block> blocks;  // I_1 .. I_M
  std::size_t M = 0;
  std::vector<double> y;      // block sums, filled by block_sums
};

// floor(j^(2/3)) in exact integer arithmetic.
std::size_t block_size(std::size_t j);
// r_i = i + floor(i^delta)
std::size_t refinement_depth(std::size_t i, double delta);

BlockDecomposition build_blocks(std::size_t N, double delta_exponent = 0.3);
// Raw-mode block sums of xi_1 .. xi_N; the last block is cut at N.
void block_sums(BlockDecomposition& blocks, std::span<const double> xi);

struct BlockLlnResult {
  double ratio = 0.0;  // |N - sum y_j^2| / N^(2 gamma)
  double sum_of_squares = 0.0;
  std::size_t M = 0;
  bool raw_mode = true;
};

BlockLlnResult block_lln_check(const MapFamily& family, const Observable& phi, double a,
                               std::size_t N, double gamma, const Normalization& norm,
                               std::uint64_t seed = 1, std::uint64_t stream = 0);

struct BlockOptions {
  std::size_t N = 100000;
  std::size_t samples = 100;
  double gamma = 0.41;
  double delta = 0.3;
  std::uint64_t seed = 1;
  double ratio_max = 5.0;
  double required_fraction = 0.9;
  NormalizerOptions normalizer;
};

ExperimentReport block_lln_experiment(const MapFamily& family, const Observable& phi,
                                      const BlockOptions& options,
                                      const Executor& executor = Executor::sequential());

// Piecewise-constant function on parameter cells.
struct StepFunction {
  std::vector<double> a_lo;
  std::vector<double> a_hi;
  std::vector<double> values;
  double operator()(double a) const;
};

using NormalizationFn = std::function<Normalization(double a)>;

// Cell averages of xi_i over the depth-r_i partition, by 8-point Gauss-Legendre
// on each cell.
StepFunction step_function_chi(const MapFamily& family, const Observable& phi, std::size_t i,
                               double delta_exponent, const ParameterPartition& partition,
                               const NormalizationFn& normalization);

// Lebesgue measure (fraction of the window) of {a : |xi_i - chi_i| > threshold},
// estimated on `samples` stratified parameters.
double chi_error_measure(const MapFamily& family, const Observable& phi, std::size_t i,
                         const StepFunction& chi, const NormalizationFn& normalization,
                         double threshold, std::size_t samples, std::uint64_t seed);

enum class ErdosFortetVariant { power, power_minus_one };
std::string_view to_string(ErdosFortetVariant v);

struct ErdosFortetOptions {
  std::size_t n = 2000;
  std::size_t samples = 100000;
  ErdosFortetVariant variant = ErdosFortetVariant::power;
  std::uint64_t seed = 1;
  double ks_threshold = 0.02;        // normality accepted at or below
  double kurtosis_threshold = 0.15;
  double reject_ks = 0.03;           // normality rejected at or above
  double reject_kurtosis = 0.3;
};

ExperimentReport erdos_fortet(const ErdosFortetOptions& options,
                              const Executor& executor = Executor::sequential());

struct IndicatorInterval {
  double lo = 0.0;
  double hi = 1.0;
};

ExperimentReport typicality_check(const MapFamily& family,
                                  const std::vector<IndicatorInterval>& indicators, double a,
                                  std::size_t n, const SolverOptions& solver = {},
                                  std::uint64_t seed = 1, double threshold = 5e-3);

struct TypicalityOptions {
  std::size_t n = 1000000;
  std::size_t samples = 50;
  std::size_t indicators = 16;
  int max_level = 6;  // dyadic intervals of length 2^-m, 1 <= m <= max_level
  std::uint64_t seed = 1;
  double threshold = 5e-3;
  double required_fraction = 0.95;
  SolverOptions solver;
};

std::vector<IndicatorInterval> random_dyadic_indicators(std::size_t count, int max_level,
                                                        std::uint64_t seed, std::uint64_t stream);

ExperimentReport typicality_experiment(const MapFamily& family, const TypicalityOptions& options,
                                       const Executor& executor = Executor::sequential());

}  // namespace pemlab
