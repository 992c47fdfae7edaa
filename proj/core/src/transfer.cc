#include "pemlab/transfer.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pemlab/error.h"
#include "pemlab/stats.h"
#include "text.h"

namespace pemlab {

UlamSystem::UlamSystem(double a, std::size_t grid_count, std::vector<std::size_t> row_start,
                       std::vector<std::uint32_t> column, std::vector<double> weight)
    : a_(a),
      n_(grid_count),
      row_start_(std::move(row_start)),
      column_(std::move(column)),
      weight_(std::move(weight)) {}

double UlamSystem::row_sum(std::size_t i) const {
  double s = 0.0;
  for (std::size_t e = row_start_[i]; e < row_start_[i + 1]; ++e) s += weight_[e];
  return s;
}

void UlamSystem::push_forward(std::span<const double> mass, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    const double m = mass[i];
    if (m == 0.0) continue;
    for (std::size_t e = row_start_[i]; e < row_start_[i + 1]; ++e) {
      out[column_[e]] += m * weight_[e];
    }
  }
}

std::vector<double> UlamSystem::push_forward(std::span<const double> mass) const {
  std::vector<double> out(n_);
  push_forward(mass, out);
  return out;
}

void UlamSystem::pull_back(std::span<const double> values, std::span<double> out) const {
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t e = row_start_[i]; e < row_start_[i + 1]; ++e) {
      s += weight_[e] * values[column_[e]];
    }
    out[i] = s;
  }
}

std::vector<double> UlamSystem::transfer(std::span<const double> cell_values, std::size_t n) const {
  std::vector<double> cur(cell_values.begin(), cell_values.end());
  std::vector<double> next(n_);
  for (std::size_t k = 0; k < n; ++k) {
    push_forward(cur, next);
    cur.swap(next);
  }
  return cur;
}

const std::vector<double>& UlamSystem::density() const {
  if (!solved()) throw StateError("invariant density has not been solved");
  return density_;
}

const std::vector<bool>& UlamSystem::support_mask() const {
  if (!solved()) throw StateError("invariant density has not been solved");
  return support_;
}

void UlamSystem::set_solution(std::vector<double> density, std::vector<bool> support,
                              std::size_t iterations, double residual) {
  density_ = std::move(density);
  support_ = std::move(support);
  iterations_ = iterations;
  residual_ = residual;
}

UlamSystem build_ulam(const MapFamily& family, double a, std::size_t grid_count) {
  if (grid_count < 2) throw DomainError("Ulam grid needs at least 2 cells");
  if (grid_count > std::numeric_limits<std::uint32_t>::max()) {
    throw DomainError("Ulam grid too large");
  }
  family.require_admissible(a);
  const std::size_t n = grid_count;
  const auto nd = static_cast<double>(n);
  const auto breaks = family.branch_points(a);

  std::vector<std::size_t> row_start(n + 1, 0);
  std::vector<std::uint32_t> column;
  std::vector<double> weight;
  column.reserve(4 * n);
  weight.reserve(4 * n);

  std::vector<std::pair<std::uint32_t, double>> row;
  std::vector<double> cuts;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    const double cell_lo = static_cast<double>(i) / nd;
    const double cell_hi = static_cast<double>(i + 1) / nd;
    for (int k = 1; k <= family.p0(); ++k) {
      const double xl = std::max(cell_lo, breaks[static_cast<std::size_t>(k - 1)]);
      const double xr = std::min(cell_hi, breaks[static_cast<std::size_t>(k)]);
      if (!(xr > xl)) continue;
      const bool up = family.branch_increasing(k);
      const double yl = std::clamp(family.branch_eval(a, k, xl), 0.0, 1.0);
      const double yr = std::clamp(family.branch_eval(a, k, xr), 0.0, 1.0);
      const double ylo = std::min(yl, yr);
      const double yhi = std::max(yl, yr);
      // Cut the x-range at preimages of the cell boundaries crossed by the image.
      const auto j_first = std::min(static_cast<std::size_t>(ylo * nd), n - 1);
      cuts.clear();
      cuts.push_back(up ? xl : xr);
      for (std::size_t j = j_first + 1; static_cast<double>(j) / nd < yhi && j < n; ++j) {
        cuts.push_back(family.branch_inverse(a, k, static_cast<double>(j) / nd));
      }
      cuts.push_back(up ? xr : xl);
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double len = std::abs(cuts[c + 1] - cuts[c]);
        if (len <= 0.0) continue;
        row.emplace_back(static_cast<std::uint32_t>(j_first + c), len * nd);
      }
    }
    std::sort(row.begin(), row.end());
    double total = 0.0;
    for (const auto& [j, w] : row) total += w;
    for (std::size_t r = 0; r < row.size(); ++r) {
      if (!column.empty() && column.size() > row_start[i] && column.back() == row[r].first) {
        weight.back() += row[r].second / total;
      } else {
        column.push_back(row[r].first);
        weight.push_back(row[r].second / total);
      }
    }
    row_start[i + 1] = column.size();
  }
  return UlamSystem(a, n, std::move(row_start), std::move(column), std::move(weight));
}

const std::vector<double>& invariant_density(UlamSystem& system, double tolerance,
                                             std::size_t max_iterations,
                                             double support_threshold) {
  if (!(tolerance > 0.0)) throw DomainError("power iteration tolerance must be positive");
  const std::size_t n = system.grid_count();
  std::vector<double> v(n, 1.0 / static_cast<double>(n));
  std::vector<double> w(n);
  double residual = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  while (it < max_iterations) {
    system.push_forward(v, w);
    ++it;
    double total = 0.0;
    for (double x : w) total += x;
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] /= total;
      residual += std::abs(w[i] - v[i]);
    }
    v.swap(w);
    if (residual < tolerance) break;
  }
  if (!(residual < tolerance)) {
    throw ConvergenceError("power iteration did not converge in " +
                               std::to_string(max_iterations) + " iterations",
                           residual);
  }
  std::vector<double> density(n);
  std::vector<bool> support(n);
  for (std::size_t i = 0; i < n; ++i) {
    density[i] = v[i] * static_cast<double>(n);
    support[i] = density[i] > support_threshold;
  }
  system.set_solution(std::move(density), std::move(support), it, residual);
  return system.density();
}

UlamSystem solved_system(const MapFamily& family, double a, const SolverOptions& options) {
  UlamSystem system = build_ulam(family, a, options.grid_count);
  invariant_density(system, options.tolerance, options.max_iterations, options.support_threshold);
  return system;
}

double measure_mean(const UlamSystem& system, const Observable& phi) {
  const auto& h = system.density();
  const auto avg = phi.cell_averages(system.grid_count());
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * avg[i];
  return s / static_cast<double>(h.size());
}

double measure_of(const UlamSystem& system, double lo, double hi) {
  const auto& h = system.density();
  const std::size_t n = h.size();
  const auto nd = static_cast<double>(n);
  lo = std::clamp(lo, 0.0, 1.0);
  hi = std::clamp(hi, 0.0, 1.0);
  double s = 0.0;
  for (std::size_t i = std::min(static_cast<std::size_t>(lo * nd), n - 1); i < n; ++i) {
    const double c0 = static_cast<double>(i) / nd;
    const double c1 = static_cast<double>(i + 1) / nd;
    if (c0 >= hi) break;
    const double overlap = std::min(c1, hi) - std::max(c0, lo);
    if (overlap > 0.0) s += h[i] * overlap;
  }
  return s;
}

namespace {

struct Centered {
  std::vector<double> values;  // phi cell averages minus the mean
  std::vector<double> mass;    // centered values times the invariant cell mass
  double mean = 0.0;
};

Centered centered(const UlamSystem& system, const Observable& phi) {
  const auto& h = system.density();
  const std::size_t n = h.size();
  Centered c;
  c.values = phi.cell_averages(n);
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m += h[i] * c.values[i];
  c.mean = m / static_cast<double>(n);
  c.mass.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.values[i] -= c.mean;
    c.mass[i] = c.values[i] * h[i] / static_cast<double>(n);
  }
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double correlation(const UlamSystem& system, const Observable& phi, const Observable& psi,
                   std::size_t lag) {
  Centered c = centered(system, phi);
  const Centered target = centered(system, psi);
  std::vector<double> next(system.grid_count());
  for (std::size_t k = 0; k < lag; ++k) {
    system.push_forward(c.mass, next);
    c.mass.swap(next);
  }
  return dot(c.mass, target.values);
}

std::vector<double> autocovariances(const UlamSystem& system, const Observable& phi,
                                    std::size_t lags) {
  Centered c = centered(system, phi);
  std::vector<double> out;
  out.reserve(lags + 1);
  out.push_back(dot(c.mass, c.values));
  std::vector<double> next(system.grid_count());
  for (std::size_t k = 1; k <= lags; ++k) {
    system.push_forward(c.mass, next);
    c.mass.swap(next);
    out.push_back(dot(c.mass, c.values));
  }
  return out;
}

DecayFit decay_rate(std::span<const double> correlations, double floor) {
  std::vector<double> lag, logc;
  for (std::size_t k = 0; k < correlations.size(); ++k) {
    const double v = std::abs(correlations[k]);
    if (v > floor && std::isfinite(v)) {
      lag.push_back(static_cast<double>(k));
      logc.push_back(std::log(v));
    }
  }
  if (lag.size() < 5) {
    throw InsufficientDataError("decay fit needs at least 5 lags above the floor, got " +
                                std::to_string(lag.size()));
  }
  const auto fit = stats::least_squares(lag, logc);
  return {std::exp(fit.slope), fit.r_squared, lag.size()};
}

VarianceResult green_kubo_sigma(const UlamSystem& system, const Observable& phi, double tolerance,
                                std::size_t max_lag) {
  Centered c = centered(system, phi);
  VarianceResult result;
  result.mean = c.mean;
  result.autocovariances.push_back(dot(c.mass, c.values));
  double sum = result.autocovariances.front();
  std::vector<double> next(system.grid_count());
  int small_run = 0;
  result.trusted = false;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    system.push_forward(c.mass, next);
    c.mass.swap(next);
    const double ck = dot(c.mass, c.values);
    result.autocovariances.push_back(ck);
    sum += 2.0 * ck;
    result.truncation_K = k;
    small_run = std::abs(ck) < tolerance ? small_run + 1 : 0;
    if (small_run == 3) {
      result.trusted = true;
      break;
    }
  }
  if (max_lag == 0) result.trusted = true;
  result.sigma_squared = sum;
  try {
    const DecayFit fit = decay_rate(result.autocovariances);
    result.rho_fit = fit.rho;
    result.rho_r_squared = fit.r_squared;
  } catch (const InsufficientDataError&) {
    result.rho_fit.reset();
  }
  return result;
}

VarianceResult green_kubo_sigma(const MapFamily& family, double a, const Observable& phi,
                                const SolverOptions& options) {
  const UlamSystem system = solved_system(family, a, options);
  return green_kubo_sigma(system, phi, options.gk_tolerance, options.max_lag);
}

Observable normalize_observable(const UlamSystem& system, const Observable& phi,
                                const SolverOptions& options) {
  const VarianceResult var = green_kubo_sigma(system, phi, options.gk_tolerance, options.max_lag);
  if (!(var.sigma_squared > kDegenerateSigma * kDegenerateSigma)) {
    throw DegenerateObservableError("sigma_a(phi) = " +
                                    detail::format_double(std::sqrt(std::max(0.0, var.sigma_squared))) +
                                    " is below the degeneracy threshold");
  }
  auto values = phi.cell_averages(system.grid_count());
  double scale = std::sqrt(var.sigma_squared);
  for (double& v : values) v = (v - var.mean) / scale;
  // The truncation lag depends on the scale of the autocovariances, so the
  // rescaled table is re-measured until its own sigma settles at 1.
  for (int round = 0; round < 4; ++round) {
    const Observable table = Observable::table(values, Observable::TableRule::cell_constant,
                                               phi.alpha(), phi.window_A());
    const VarianceResult again =
        green_kubo_sigma(system, table, options.gk_tolerance, options.max_lag);
    scale = std::sqrt(again.sigma_squared);
    if (std::abs(scale - 1.0) <= 1e-12) break;
    for (double& v : values) v = (v - again.mean) / scale;
  }
  return Observable::table(std::move(values), Observable::TableRule::cell_constant, phi.alpha(),
                           phi.window_A());
}

Observable normalize_observable(const MapFamily& family, double a, const Observable& phi,
                                const SolverOptions& options) {
  const UlamSystem system = solved_system(family, a, options);
  return normalize_observable(system, phi, options);
}

LasotaYorkeProbe lasota_yorke_probe(const MapFamily& family, double a, const Observable& phi,
                                    std::size_t n, std::size_t grid_count) {
  if (n < 1) throw DomainError("Lasota-Yorke probe needs n >= 1");
  const UlamSystem system = build_ulam(family, a, grid_count);
  auto values = system.transfer(phi.cell_averages(grid_count), n);
  LasotaYorkeProbe probe;
  probe.iterate = Observable::table(std::move(values), Observable::TableRule::cell_constant,
                                    phi.alpha(), phi.window_A());
  probe.iterate_norm_alpha = norm_alpha(probe.iterate);
  probe.phi_norm_alpha = norm_alpha(phi);
  probe.phi_l1 = l1_norm(phi);
  return probe;
}

SigmaScan sigma_scan(const MapFamily& family, const Observable& phi, std::span<const double> a_grid,
                     const SolverOptions& options, double kappa, const Executor& executor) {
  struct Point {
    double sigma = 0.0;
    double mean = 0.0;
  };
  const auto points = executor.map<Point>(a_grid.size(), [&](std::size_t i) {
    const VarianceResult v = green_kubo_sigma(family, a_grid[i], phi, options);
    if (!(v.sigma_squared > kDegenerateSigma * kDegenerateSigma)) {
      throw DegenerateObservableError("sigma_a(phi) vanishes at a = " +
                                      detail::format_double(a_grid[i]));
    }
    return Point{std::sqrt(v.sigma_squared), v.mean};
  });
  SigmaScan scan;
  scan.kappa = kappa;
  scan.a.assign(a_grid.begin(), a_grid.end());
  for (const Point& p : points) {
    scan.sigma.push_back(p.sigma);
    scan.mean.push_back(p.mean);
  }
  if (a_grid.size() >= 2) {
    double q = 0.0;
    for (std::size_t i = 0; i + 1 < a_grid.size(); ++i) {
      const double da = std::abs(a_grid[i + 1] - a_grid[i]);
      if (da > 0.0) q = std::max(q, std::abs(scan.sigma[i + 1] - scan.sigma[i]) / std::pow(da, kappa));
    }
    scan.holder_quotient = q;
  }
  return scan;
}

void write_density_csv(std::ostream& out, const UlamSystem& system) {
  const auto& h = system.density();
  const auto nd = static_cast<double>(h.size());
  out << "cell_midpoint,density\n";
  for (std::size_t i = 0; i < h.size(); ++i) {
    out << detail::format_double((static_cast<double>(i) + 0.5) / nd) << ','
        << detail::format_double(h[i]) << '\n';
  }
}

void write_autocovariance_csv(std::ostream& out, const VarianceResult& result) {
  out << "lag,autocovariance\n";
  for (std::size_t k = 0; k < result.autocovariances.size(); ++k) {
    out << k << ',' << detail::format_double(result.autocovariances[k]) << '\n';
  }
}

}  // namespace pemlab
