#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "pemlab/maps.h"
#include "pemlab/parallel.h"
#include "pemlab/valpha.h"

namespace pemlab {

struct SolverOptions {
  std::size_t grid_count = 4096;
  double tolerance = 1e-12;          // L1 change per power-iteration step
  std::size_t max_iterations = 100000;
  double support_threshold = 1e-8;
  double gk_tolerance = 1e-9;        // autocovariance truncation level
  std::size_t max_lag = 2000;
};

// Ulam discretisation of the transfer operator on N equal cells: entry (i, j)
// is the fraction of cell i that T_a maps into cell j. Stored as CSR.
class UlamSystem {
 public:
  UlamSystem(double a, std::size_t grid_count, std::vector<std::size_t> row_start,
             std::vector<std::uint32_t> column, std::vector<double> weight);

  double a() const { return a_; }
  std::size_t grid_count() const { return n_; }
  std::size_t nonzeros() const { return weight_.size(); }

  std::span<const std::size_t> row_start() const { return row_start_; }
  std::span<const std::uint32_t> columns() const { return column_; }
  std::span<const double> weights() const { return weight_; }
  double row_sum(std::size_t i) const;

  // Row vector times matrix: pushes a vector of cell masses forward one step.
  void push_forward(std::span<const double> mass, std::span<double> out) const;
  std::vector<double> push_forward(std::span<const double> mass) const;
  // Matrix times column vector: cell averages of psi composed with T.
  void pull_back(std::span<const double> values, std::span<double> out) const;

  // Ulam transfer operator acting on cell-averaged functions, n times.
  std::vector<double> transfer(std::span<const double> cell_values, std::size_t n) const;

  bool solved() const { return !density_.empty(); }
  // Cell-averaged invariant density with mean 1. Throws StateError if unsolved.
  const std::vector<double>& density() const;
  const std::vector<bool>& support_mask() const;
  std::size_t iterations() const { return iterations_; }
  double residual() const { return residual_; }

  void set_solution(std::vector<double> density, std::vector<bool> support,
                    std::size_t iterations, double residual);

 private:
  double a_;
  std::size_t n_;
  std::vector<std::size_t> row_start_;
  std::vector<std::uint32_t> column_;
  std::vector<double> weight_;
  std::vector<double> density_;
  std::vector<bool> support_;
  std::size_t iterations_ = 0;
  double residual_ = 0.0;
};

UlamSystem build_ulam(const MapFamily& family, double a, std::size_t grid_count);

// Power iteration from the uniform density; fills the system's density and
// support mask. Throws ConvergenceError after max_iterations.
const std::vector<double>& invariant_density(UlamSystem& system, double tolerance = 1e-12,
                                             std::size_t max_iterations = 100000,
                                             double support_threshold = 1e-8);

// Builds and solves in one call.
UlamSystem solved_system(const MapFamily& family, double a, const SolverOptions& options = {});

// Integral of phi against the invariant measure, from cell averages.
double measure_mean(const UlamSystem& system, const Observable& phi);
// Invariant mass of [lo, hi]; partial cells count proportionally.
double measure_of(const UlamSystem& system, double lo, double hi);

// Centered correlation  int phi * psi o T^n dmu - int phi dmu int psi dmu.
double correlation(const UlamSystem& system, const Observable& phi, const Observable& psi,
                   std::size_t lag);

// Autocovariances C_0 .. C_{lags} of phi.
std::vector<double> autocovariances(const UlamSystem& system, const Observable& phi,
                                    std::size_t lags);

struct DecayFit {
  double rho = 0.0;
  double r_squared = 0.0;
  std::size_t lags_used = 0;
};

inline constexpr double kCorrelationFloor = 1e-13;

// Fit of log|C_k| against k, element k of the input being lag k. Entries below
// the floor are dropped; fewer than five usable lags is InsufficientDataError.
DecayFit decay_rate(std::span<const double> correlations, double floor = kCorrelationFloor);

struct VarianceResult {
  double sigma_squared = 0.0;
  double mean = 0.0;
  std::vector<double> autocovariances;  // C_0 .. C_K
  std::size_t truncation_K = 0;
  std::optional<double> rho_fit;
  double rho_r_squared = 0.0;
  bool trusted = true;  // false when the tail never dropped below tolerance
};

VarianceResult green_kubo_sigma(const UlamSystem& system, const Observable& phi,
                                double tolerance = 1e-9, std::size_t max_lag = 2000);
VarianceResult green_kubo_sigma(const MapFamily& family, double a, const Observable& phi,
                                const SolverOptions& options = {});

inline constexpr double kDegenerateSigma = 1e-6;

// (phi - mean) / sigma as a cell-constant table on the system's grid.
Observable normalize_observable(const UlamSystem& system, const Observable& phi,
                                const SolverOptions& options = {});
Observable normalize_observable(const MapFamily& family, double a, const Observable& phi,
                                const SolverOptions& options = {});

struct LasotaYorkeProbe {
  double iterate_norm_alpha = 0.0;  // norm of L^n phi
  double phi_norm_alpha = 0.0;
  double phi_l1 = 0.0;
  Observable iterate = Observable::constant(0.0);
};

LasotaYorkeProbe lasota_yorke_probe(const MapFamily& family, double a, const Observable& phi,
                                    std::size_t n, std::size_t grid_count = 4096);

struct SigmaScan {
  std::vector<double> a;
  std::vector<double> sigma;
  std::vector<double> mean;
  double kappa = 0.5;
  std::optional<double> holder_quotient;  // absent for fewer than two points
};

SigmaScan sigma_scan(const MapFamily& family, const Observable& phi, std::span<const double> a_grid,
                     const SolverOptions& options = {}, double kappa = 0.5,
                     const Executor& executor = Executor::sequential());

void write_density_csv(std::ostream& out, const UlamSystem& system);
void write_autocovariance_csv(std::ostream& out, const VarianceResult& result);

}  // namespace pemlab
