#include "pemlab/asip.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "pemlab/error.h"
#include "pemlab/random.h"
#include "pemlab/stats.h"
#include "text.h"

namespace pemlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class Visit>
void walk(const MapFamily& family, double a, std::size_t n, std::uint64_t seed,
          std::uint64_t stream, Visit&& visit) {
  if (family.has_exact_dyadic_orbits()) {
    DyadicOrbit orbit(family.x0(a), seed, stream);
    for (std::size_t i = 0; i < n; ++i) {
      orbit.advance();
      visit(orbit.point());
    }
    return;
  }
  double x = family.x0(a);
  for (std::size_t i = 0; i < n; ++i) {
    x = family.step(a, x);
    visit(x);
  }
}

nlohmann::json describe_solver(const SolverOptions& s) {
  return {{"grid_count", s.grid_count},         {"tolerance", s.tolerance},
          {"max_iterations", s.max_iterations}, {"support_threshold", s.support_threshold},
          {"gk_tolerance", s.gk_tolerance},     {"max_lag", s.max_lag}};
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double t = pos - static_cast<double>(i);
  if (i + 1 >= xs.size()) return xs.back();
  return xs[i] + t * (xs[i + 1] - xs[i]);
}

void require_window(const MapFamily& family) {
  if (!(family.window() >= 0.0)) throw DomainError("family has no admissible window");
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::clt: return "clt";
    case ExperimentKind::lil: return "lil";
    case ExperimentKind::block_lln: return "block_lln";
    case ExperimentKind::variance_growth: return "variance_growth";
    case ExperimentKind::erdos_fortet: return "erdos_fortet";
    case ExperimentKind::typicality: return "typicality";
  }
  return "unknown";
}

std::string_view to_string(ErdosFortetVariant v) {
  return v == ErdosFortetVariant::power ? "power" : "power_minus_one";
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    out << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << detail::format_double(row[i]);
    }
    out << '\n';
  }
}

nlohmann::json ExperimentReport::to_json(bool include_wall_clock) const {
  nlohmann::json j;
  j["schema"] = kSchema;
  j["experiment_kind"] = kind_label.empty() ? std::string(to_string(kind)) : kind_label;
  j["config"] = config;
  j["statistics"] = statistics;
  j["verdict"] = {{"applicable", verdict_applicable}, {"pass", pass}, {"note", verdict_note}};
  if (include_wall_clock) j["wall_clock_seconds"] = wall_clock_seconds;
  return j;
}

nlohmann::json describe_family(const MapFamily& family) {
  return {{"kind", std::string(to_string(family.kind()))},
          {"base", family.base()},
          {"window", family.window()},
          {"x0",
           {{"kind", std::string(to_string(family.x0_spec().kind))},
            {"anchor", family.x0_spec().anchor},
            {"slope", family.x0_spec().slope}}}};
}

Normalization solve_normalization(const MapFamily& family, const Observable& phi, double a,
                                  const SolverOptions& solver) {
  const UlamSystem system = solved_system(family, a, solver);
  const VarianceResult v = green_kubo_sigma(system, phi, solver.gk_tolerance, solver.max_lag);
  if (!(v.sigma_squared > kDegenerateSigma * kDegenerateSigma)) {
    throw DegenerateObservableError("sigma_a(phi) vanishes at a = " + detail::format_double(a));
  }
  return {v.mean, std::sqrt(v.sigma_squared)};
}

ParameterNormalizer ParameterNormalizer::build(const MapFamily& family, const Observable& phi,
                                               const NormalizerOptions& options,
                                               const Executor& executor) {
  require_window(family);
  ParameterNormalizer out;
  out.solver_ = options.solver;
  out.max_error_ = options.max_interpolation_error;
  const double eps = family.window();
  if (family.constant_in_a() || eps == 0.0 || options.sigma_grid < 2) {
    out.grid_ = {0.0};
  } else {
    const std::size_t g = options.sigma_grid;
    out.grid_.resize(g);
    for (std::size_t k = 0; k < g; ++k) {
      out.grid_[k] = eps * static_cast<double>(k) / static_cast<double>(g - 1);
    }
  }
  out.scan_ = sigma_scan(family, phi, out.grid_, options.solver, 0.5, executor);
  if (out.grid_.size() > 1 && options.holdout > 0) {
    const std::size_t g = out.grid_.size();
    std::vector<double> held(options.holdout);
    for (std::size_t j = 0; j < options.holdout; ++j) {
      const auto k = static_cast<std::size_t>((static_cast<double>(j) + 0.5) *
                                              static_cast<double>(g - 1) /
                                              static_cast<double>(options.holdout));
      held[j] = 0.5 * (out.grid_[k] + out.grid_[std::min(k + 1, g - 1)]);
    }
    const SigmaScan check = sigma_scan(family, phi, held, options.solver, 0.5, executor);
    for (std::size_t j = 0; j < held.size(); ++j) {
      const double err = std::abs(out.sigma(held[j]) - check.sigma[j]) / check.sigma[j];
      out.holdout_error_ = std::max(out.holdout_error_, err);
    }
  }
  return out;
}

double ParameterNormalizer::interpolate(const std::vector<double>& values, double a) const {
  if (grid_.size() == 1) return values.front();
  const double lo = grid_.front(), hi = grid_.back();
  const double pos = (std::clamp(a, lo, hi) - lo) / (hi - lo) * static_cast<double>(grid_.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), grid_.size() - 2);
  const double t = pos - static_cast<double>(i);
  return values[i] + t * (values[i + 1] - values[i]);
}

double ParameterNormalizer::sigma(double a) const { return interpolate(scan_.sigma, a); }
double ParameterNormalizer::mean(double a) const { return interpolate(scan_.mean, a); }

Normalization ParameterNormalizer::at(const MapFamily& family, const Observable& phi,
                                      double a) const {
  if (constant()) return {scan_.mean.front(), scan_.sigma.front()};
  const UlamSystem system = solved_system(family, a, solver_);
  return {measure_mean(system, phi), sigma(a)};
}

void walk_orbit(const MapFamily& family, double a, std::size_t n, std::uint64_t seed,
                std::uint64_t stream, const std::function<void(double)>& visit) {
  family.require_admissible(a);
  walk(family, a, n, seed, stream, visit);
}

XiProcess xi_process(const MapFamily& family, const Observable& phi, double a, std::size_t n,
                     const Normalization& norm, std::uint64_t seed, std::uint64_t stream) {
  family.require_admissible(a);
  if (!(norm.sigma > kDegenerateSigma)) {
    throw DegenerateObservableError("normalising sigma is below the degeneracy threshold");
  }
  XiProcess xi;
  xi.a = a;
  xi.mean_a = norm.mean;
  xi.sigma_a = norm.sigma;
  xi.values.reserve(n);
  walk(family, a, n, seed, stream,
       [&](double x) { xi.values.push_back((phi(x) - norm.mean) / norm.sigma); });
  return xi;
}

XiProcess xi_process(const MapFamily& family, const Observable& phi, double a, std::size_t n,
                     const SolverOptions& solver) {
  const Normalization norm = solve_normalization(family, phi, a, solver);
  return xi_process(family, phi, a, n, norm);
}

ExperimentReport clt_experiment(const MapFamily& family, const Observable& phi,
                                const CltOptions& options, const Executor& executor) {
  const auto start = Clock::now();
  ExperimentReport report;
  report.kind = ExperimentKind::clt;
  report.config = {{"family", describe_family(family)},
                   {"observable", phi.describe()},
                   {"n", options.n},
                   {"samples", options.samples},
                   {"seed", options.seed},
                   {"ks_threshold", options.ks_threshold},
                   {"solver", describe_solver(options.normalizer.solver)}};

  const ParameterNormalizer normalizer =
      ParameterNormalizer::build(family, phi, options.normalizer, executor);
  const auto params = stratified_parameters(0.0, family.window(), options.samples, options.seed);
  const double root_n = std::sqrt(static_cast<double>(options.n));
  const auto sums = executor.map<double>(options.samples, [&](std::size_t i) {
    const Normalization norm = normalizer.at(family, phi, params[i]);
    double s = 0.0;
    walk(family, params[i], options.n, options.seed,
         stream_id(StreamPurpose::expansion_tail, i), [&](double x) { s += phi(x) - norm.mean; });
    return s / (norm.sigma * root_n);
  });

  const bool insufficient = options.samples < options.min_samples;
  const double ks = sums.empty() ? 1.0 : stats::ks_distance_normal(sums, 1.0);
  const auto m = stats::moments(sums);
  report.statistics = {{"ks_distance", ks},
                       {"mean", m.mean},
                       {"variance", m.variance},
                       {"excess_kurtosis", m.excess_kurtosis},
                       {"samples", options.samples},
                       {"insufficient_samples", insufficient},
                       {"sigma_holdout_max_relative_error", normalizer.holdout_max_relative_error()},
                       {"sigma_holdout_ok", normalizer.holdout_ok()}};
  report.pass = !insufficient && ks <= options.ks_threshold && normalizer.holdout_ok();
  if (insufficient) report.verdict_note = "insufficient samples";
  else if (!normalizer.holdout_ok()) report.verdict_note = "sigma interpolation check failed";
  else report.verdict_note = report.pass ? "ks within threshold" : "ks above threshold";

  CsvTable table{"normalized_sums", {"sample", "a", "normalized_sum"}, {}};
  for (std::size_t i = 0; i < sums.size(); ++i) {
    table.rows.push_back({static_cast<double>(i), params[i], sums[i]});
  }
  report.extracts.push_back(std::move(table));
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

std::vector<std::size_t> lil_checkpoints(std::size_t n_max, double base) {
  if (!(base > 1.0)) throw DomainError("checkpoint base must exceed 1");
  std::vector<std::size_t> out;
  double p = 1.0;
  while (true) {
    const auto c = static_cast<std::size_t>(std::ceil(p - 1e-9));
    if (c > n_max) break;
    if (c >= kLilFirstIndex && (out.empty() || out.back() != c)) out.push_back(c);
    p *= base;
  }
  if (n_max >= kLilFirstIndex && (out.empty() || out.back() != n_max)) out.push_back(n_max);
  return out;
}

namespace {

class LilTracker {
 public:
  explicit LilTracker(std::span<const std::size_t> checkpoints) : checkpoints_(checkpoints) {}

  void push(double xi) {
    sum_ += xi;
    ++k_;
    if (k_ < kLilFirstIndex) return;
    const double kd = static_cast<double>(k_);
    const double v = sum_ / std::sqrt(2.0 * kd * std::log(std::log(kd)));
    running_ = std::max(running_, v);
    if (next_ < checkpoints_.size() && checkpoints_[next_] == k_) {
      curve_.push_back(running_);
      ++next_;
    }
  }

  std::vector<double> take() { return std::move(curve_); }

 private:
  std::span<const std::size_t> checkpoints_;
  std::size_t next_ = 0;
  std::size_t k_ = 0;
  double sum_ = 0.0;
  double running_ = -std::numeric_limits<double>::infinity();
  std::vector<double> curve_;
};

}  // namespace

std::vector<double> lil_running_max(std::span<const double> xi,
                                    std::span<const std::size_t> checkpoints) {
  LilTracker tracker(checkpoints);
  for (double v : xi) tracker.push(v);
  return tracker.take();
}

ExperimentReport lil_experiment(const MapFamily& family, const Observable& phi,
                                const LilOptions& options, const Executor& executor) {
  const auto start = Clock::now();
  ExperimentReport report;
  report.kind = ExperimentKind::lil;
  report.config = {{"family", describe_family(family)},
                   {"observable", phi.describe()},
                   {"n_max", options.n_max},
                   {"samples", options.samples},
                   {"checkpoint_base", options.checkpoint_base},
                   {"seed", options.seed},
                   {"band", {options.band_lo, options.band_hi}},
                   {"required_fraction", options.required_fraction},
                   {"solver", describe_solver(options.normalizer.solver)}};

  const auto checkpoints = lil_checkpoints(options.n_max, options.checkpoint_base);
  const ParameterNormalizer normalizer =
      ParameterNormalizer::build(family, phi, options.normalizer, executor);
  const auto params = stratified_parameters(0.0, family.window(), options.samples, options.seed);
  const auto curves = executor.map<std::vector<double>>(options.samples, [&](std::size_t i) {
    const Normalization norm = normalizer.at(family, phi, params[i]);
    LilTracker tracker(checkpoints);
    walk(family, params[i], options.n_max, options.seed,
         stream_id(StreamPurpose::expansion_tail, i),
         [&](double x) { tracker.push((phi(x) - norm.mean) / norm.sigma); });
    return tracker.take();
  });

  std::vector<double> finals;
  std::size_t in_band = 0, monotone = 0;
  for (const auto& c : curves) {
    if (c.empty()) continue;
    finals.push_back(c.back());
    if (c.back() >= options.band_lo && c.back() <= options.band_hi) ++in_band;
    if (std::is_sorted(c.begin(), c.end())) ++monotone;
  }
  const double n_curves = static_cast<double>(std::max<std::size_t>(finals.size(), 1));
  const double fraction = static_cast<double>(in_band) / n_curves;
  const double monotone_fraction = static_cast<double>(monotone) / n_curves;
  std::vector<double> mean_curve(checkpoints.size(), 0.0);
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < c.size(); ++k) mean_curve[k] += c[k] / n_curves;
  }
  report.statistics = {{"checkpoints", checkpoints},
                       {"mean_curve", mean_curve},
                       {"final_median", quantile(finals, 0.5)},
                       {"final_q05", quantile(finals, 0.05)},
                       {"final_q95", quantile(finals, 0.95)},
                       {"fraction_in_band", fraction},
                       {"monotone_fraction", monotone_fraction},
                       {"samples", options.samples},
                       {"sigma_holdout_max_relative_error", normalizer.holdout_max_relative_error()}};
  report.verdict_applicable = !finals.empty();
  report.pass = !finals.empty() && fraction >= options.required_fraction && monotone == finals.size();
  report.verdict_note = report.pass ? "running maxima within band" : "band fraction below requirement";

  CsvTable table{"curves", {"sample", "a", "checkpoint", "running_max"}, {}};
  for (std::size_t i = 0; i < curves.size(); ++i) {
    for (std::size_t k = 0; k < curves[i].size(); ++k) {
      table.rows.push_back({static_cast<double>(i), params[i],
                            static_cast<double>(checkpoints[k]), curves[i][k]});
    }
  }
  report.extracts.push_back(std::move(table));
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

VarianceGrowthResult variance_growth(const MapFamily& family, const Observable& phi, std::size_t m,
                                     std::size_t n, const VarianceGrowthOptions& options,
                                     const Executor& executor) {
  VarianceGrowthResult result;
  result.m = m;
  result.n = n;
  result.in_range = n >= 1 && static_cast<double>(n) <= options.eta * static_cast<double>(m) / 2.0;
  if (n == 0) return result;
  if (m < 1) throw DomainError("block start m must be at least 1");
  const ParameterNormalizer normalizer =
      ParameterNormalizer::build(family, phi, options.normalizer, executor);
  const auto params = stratified_parameters(0.0, family.window(), options.quadrature, options.seed);
  const auto squares = executor.map<double>(options.quadrature, [&](std::size_t i) {
    const Normalization norm = normalizer.at(family, phi, params[i]);
    double s = 0.0;
    std::size_t k = 0;
    walk(family, params[i], m + n - 1, options.seed, stream_id(StreamPurpose::expansion_tail, i),
         [&](double x) {
           if (++k >= m) s += (phi(x) - norm.mean) / norm.sigma;
         });
    return s * s;
  });
  double total = 0.0;
  for (double v : squares) total += v;
  result.value = total / static_cast<double>(std::max<std::size_t>(squares.size(), 1));
  return result;
}

std::size_t block_size(std::size_t j) {
  if (j == 0) return 0;
  const std::uint64_t target = static_cast<std::uint64_t>(j) * j;
  auto s = static_cast<std::uint64_t>(std::cbrt(static_cast<double>(target)));
  while (s > 0 && s * s * s > target) --s;
  while ((s + 1) * (s + 1) * (s + 1) <= target) ++s;
  return static_cast<std::size_t>(s);
}

std::size_t refinement_depth(std::size_t i, double delta) {
  const double p = std::pow(static_cast<double>(i), delta);
  return i + static_cast<std::size_t>(std::floor(p + 1e-12));
}

BlockDecomposition build_blocks(std::size_t N, double delta_exponent) {
  if (N < 1) throw DomainError("block horizon N must be at least 1");
  BlockDecomposition d;
  d.N = N;
  d.delta_exponent = delta_exponent;
  std::size_t first = 1;
  for (std::size_t j = 1;; ++j) {
    const Block b{first, block_size(j)};
    d.blocks.push_back(b);
    if (b.last() >= N) {
      d.M = j;
      break;
    }
    first += b.size;
  }
  return d;
}

void block_sums(BlockDecomposition& blocks, std::span<const double> xi) {
  if (xi.size() < blocks.N) throw UsageError("process shorter than the block horizon");
  blocks.y.assign(blocks.blocks.size(), 0.0);
  for (std::size_t j = 0; j < blocks.blocks.size(); ++j) {
    const Block& b = blocks.blocks[j];
    const std::size_t last = std::min(b.last(), blocks.N);
    double s = 0.0;
    for (std::size_t i = b.first; i <= last; ++i) s += xi[i - 1];
    blocks.y[j] = s;
  }
}

BlockLlnResult block_lln_check(const MapFamily& family, const Observable& phi, double a,
                               std::size_t N, double gamma, const Normalization& norm,
                               std::uint64_t seed, std::uint64_t stream) {
  if (!(gamma > 0.4)) throw DomainError("block LLN exponent gamma must exceed 2/5");
  const XiProcess xi = xi_process(family, phi, a, N, norm, seed, stream);
  BlockDecomposition blocks = build_blocks(N);
  block_sums(blocks, xi.values);
  BlockLlnResult r;
  for (double y : blocks.y) r.sum_of_squares += y * y;
  r.M = blocks.M;
  r.ratio = std::abs(static_cast<double>(N) - r.sum_of_squares) /
            std::pow(static_cast<double>(N), 2.0 * gamma);
  return r;
}

ExperimentReport block_lln_experiment(const MapFamily& family, const Observable& phi,
                                      const BlockOptions& options, const Executor& executor) {
  const auto start = Clock::now();
  ExperimentReport report;
  report.kind = ExperimentKind::block_lln;
  report.config = {{"family", describe_family(family)},
                   {"observable", phi.describe()},
                   {"N", options.N},
                   {"samples", options.samples},
                   {"gamma", options.gamma},
                   {"delta", options.delta},
                   {"seed", options.seed},
                   {"ratio_max", options.ratio_max},
                   {"required_fraction", options.required_fraction},
                   {"mode", "raw"},
                   {"solver", describe_solver(options.normalizer.solver)}};
  const ParameterNormalizer normalizer =
      ParameterNormalizer::build(family, phi, options.normalizer, executor);
  const auto params = stratified_parameters(0.0, family.window(), options.samples, options.seed);
  const auto results = executor.map<BlockLlnResult>(options.samples, [&](std::size_t i) {
    const Normalization norm = normalizer.at(family, phi, params[i]);
    return block_lln_check(family, phi, params[i], options.N, options.gamma, norm, options.seed,
                           stream_id(StreamPurpose::expansion_tail, i));
  });
  std::size_t within = 0;
  std::vector<double> ratios;
  for (const auto& r : results) {
    ratios.push_back(r.ratio);
    if (r.ratio <= options.ratio_max) ++within;
  }
  const BlockDecomposition blocks = build_blocks(options.N, options.delta);
  const double m_bound = 4.0 * std::pow(static_cast<double>(options.N), 0.6);
  const double fraction =
      static_cast<double>(within) / static_cast<double>(std::max<std::size_t>(results.size(), 1));
  report.statistics = {{"M", blocks.M},
                       {"M_bound", m_bound},
                       {"ratio_median", quantile(ratios, 0.5)},
                       {"ratio_q90", quantile(ratios, 0.9)},
                       {"ratio_max_observed", ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end())},
                       {"fraction_within", fraction},
                       {"samples", options.samples}};
  report.verdict_applicable = !results.empty();
  report.pass = !results.empty() && fraction >= options.required_fraction &&
                static_cast<double>(blocks.M) <= m_bound;
  report.verdict_note = report.pass ? "block discrepancies within bound" : "block discrepancies too large";
  CsvTable table{"ratios", {"sample", "a", "ratio"}, {}};
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    table.rows.push_back({static_cast<double>(i), params[i], ratios[i]});
  }
  report.extracts.push_back(std::move(table));
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

double StepFunction::operator()(double a) const {
  auto it = std::upper_bound(a_lo.begin(), a_lo.end(), a);
  if (it == a_lo.begin()) return values.front();
  return values[static_cast<std::size_t>(it - a_lo.begin()) - 1];
}

namespace {

double xi_at(const MapFamily& family, const Observable& phi, std::size_t i, double a,
             const NormalizationFn& normalization) {
  double x = family.x0(a);
  for (std::size_t k = 0; k < i; ++k) x = family.step(a, x);
  const Normalization n = normalization(a);
  return (phi(x) - n.mean) / n.sigma;
}

}  // namespace

StepFunction step_function_chi(const MapFamily& family, const Observable& phi, std::size_t i,
                               double delta_exponent, const ParameterPartition& partition,
                               const NormalizationFn& normalization) {
  const std::size_t r = refinement_depth(i, delta_exponent);
  if (r > kPartitionDepthCap) {
    throw DepthCapError("refinement depth " + std::to_string(r) +
                        " exceeds the partition cap; use sampled mode");
  }
  if (partition.depth != r) {
    throw UsageError("partition depth " + std::to_string(partition.depth) +
                     " does not match the refinement depth " + std::to_string(r));
  }
  static constexpr double gx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                   -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                   0.7966664774136267,  0.9602898564975363};
  static constexpr double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                   0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                   0.2223810344533745, 0.1012285362903763};
  StepFunction chi;
  for (const PartitionCell& cell : partition.cells) {
    const double c = 0.5 * (cell.a_lo + cell.a_hi), h = 0.5 * (cell.a_hi - cell.a_lo);
    double s = 0.0;
    for (int q = 0; q < 8; ++q) s += gw[q] * xi_at(family, phi, i, c + h * gx[q], normalization);
    chi.a_lo.push_back(cell.a_lo);
    chi.a_hi.push_back(cell.a_hi);
    chi.values.push_back(0.5 * s);
  }
  return chi;
}

double chi_error_measure(const MapFamily& family, const Observable& phi, std::size_t i,
                         const StepFunction& chi, const NormalizationFn& normalization,
                         double threshold, std::size_t samples, std::uint64_t seed) {
  if (chi.values.empty() || samples == 0) return 0.0;
  const auto params = stratified_parameters(chi.a_lo.front(), chi.a_hi.back(), samples, seed);
  std::size_t bad = 0;
  for (double a : params) {
    if (std::abs(xi_at(family, phi, i, a, normalization) - chi(a)) > threshold) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(samples);
}

ExperimentReport erdos_fortet(const ErdosFortetOptions& options, const Executor& executor) {
  const auto start = Clock::now();
  ExperimentReport report;
  report.kind = ExperimentKind::erdos_fortet;
  report.config = {{"n", options.n},
                   {"samples", options.samples},
                   {"variant", std::string(to_string(options.variant))},
                   {"seed", options.seed},
                   {"observable", Observable::erdos_fortet().describe()},
                   {"ks_threshold", options.ks_threshold},
                   {"kurtosis_threshold", options.kurtosis_threshold},
                   {"reject_ks", options.reject_ks},
                   {"reject_kurtosis", options.reject_kurtosis}};
  const bool minus_one = options.variant == ErdosFortetVariant::power_minus_one;
  const double root_n = std::sqrt(static_cast<double>(options.n));
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const auto sums = executor.map<double>(options.samples, [&](std::size_t s) {
    StreamRng start_rng(options.seed, stream_id(StreamPurpose::monte_carlo, s));
    const std::uint64_t x0 = start_rng.next_u64();
    DyadicOrbit orbit =
        DyadicOrbit::from_word(x0, options.seed, stream_id(StreamPurpose::expansion_tail, s));
    double total = 0.0;
    for (std::size_t i = 1; i <= options.n; ++i) {
      orbit.advance();
      // (2^i - 1) x = 2^i x - x modulo 1, on 64-bit fixed point.
      const std::uint64_t w = minus_one ? orbit.word() - x0 : orbit.word();
      const double t = static_cast<double>(w >> 11) * 0x1.0p-53;
      const double c = std::cos(kTwoPi * t);
      total += c + (2.0 * c * c - 1.0);
    }
    return total / root_n;
  });

  const bool degenerate = options.samples < 2;
  const double ks = degenerate ? 1.0 : stats::ks_distance_normal(sums, std::sqrt(2.0));
  const auto m = stats::moments(sums);
  const bool accepted = ks <= options.ks_threshold &&
                        std::abs(m.excess_kurtosis) <= options.kurtosis_threshold;
  const bool rejected = ks >= options.reject_ks ||
                        std::abs(m.excess_kurtosis) >= options.reject_kurtosis;
  report.statistics = {{"ks_distance", ks},
                       {"mean", m.mean},
                       {"variance", m.variance},
                       {"excess_kurtosis", m.excess_kurtosis},
                       {"normality_accepted", accepted},
                       {"normality_rejected", rejected},
                       {"degenerate", degenerate}};
  report.verdict_applicable = !degenerate;
  if (degenerate) {
    report.pass = false;
    report.verdict_note = "degenerate: fewer than two samples";
  } else if (minus_one) {
    report.pass = rejected;
    report.verdict_note = rejected ? "normality rejected as expected" : "normality not rejected";
  } else {
    report.pass = accepted;
    report.verdict_note = accepted ? "normality accepted" : "normality not accepted";
  }
  CsvTable table{"normalized_sums", {"sample", "normalized_sum"}, {}};
  for (std::size_t i = 0; i < sums.size(); ++i) {
    table.rows.push_back({static_cast<double>(i), sums[i]});
  }
  report.extracts.push_back(std::move(table));
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

ExperimentReport typicality_check(const MapFamily& family,
                                  const std::vector<IndicatorInterval>& indicators, double a,
                                  std::size_t n, const SolverOptions& solver, std::uint64_t seed,
                                  double threshold) {
  const auto start = Clock::now();
  ExperimentReport report;
  report.kind = ExperimentKind::typicality;
  nlohmann::json ind = nlohmann::json::array();
  for (const auto& I : indicators) ind.push_back({I.lo, I.hi});
  report.config = {{"family", describe_family(family)}, {"a", a},         {"n", n},
                   {"indicators", ind},                 {"seed", seed},   {"threshold", threshold},
                   {"solver", describe_solver(solver)}};
  family.require_admissible(a);
  if (n == 0 || indicators.empty()) {
    report.verdict_applicable = false;
    report.statistics = {{"max_discrepancy", nullptr}, {"checkpoints", nlohmann::json::array()}};
    report.verdict_note = "empty";
    report.wall_clock_seconds = seconds_since(start);
    return report;
  }
  const UlamSystem system = solved_system(family, a, solver);
  std::vector<double> mass(indicators.size());
  for (std::size_t k = 0; k < indicators.size(); ++k) {
    mass[k] = measure_of(system, indicators[k].lo, indicators[k].hi);
  }
  std::vector<std::size_t> checkpoints;
  for (std::size_t c = 10; c < n; c *= 10) checkpoints.push_back(c);
  checkpoints.push_back(n);

  std::vector<std::size_t> hits(indicators.size(), 0);
  std::vector<double> curve;
  std::size_t step = 0, next = 0;
  const auto max_discrepancy = [&](std::size_t count) {
    double d = 0.0;
    for (std::size_t k = 0; k < indicators.size(); ++k) {
      d = std::max(d, std::abs(static_cast<double>(hits[k]) / static_cast<double>(count) - mass[k]));
    }
    return d;
  };
  walk(family, a, n, seed, stream_id(StreamPurpose::expansion_tail, 0), [&](double x) {
    for (std::size_t k = 0; k < indicators.size(); ++k) {
      if (x >= indicators[k].lo && x <= indicators[k].hi) ++hits[k];
    }
    ++step;
    if (next < checkpoints.size() && step == checkpoints[next]) {
      curve.push_back(max_discrepancy(step));
      ++next;
    }
  });
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t k = 0; k < indicators.size(); ++k) {
    const double freq = static_cast<double>(hits[k]) / static_cast<double>(n);
    per.push_back({{"lo", indicators[k].lo},
                   {"hi", indicators[k].hi},
                   {"mass", mass[k]},
                   {"frequency", freq},
                   {"discrepancy", std::abs(freq - mass[k])}});
  }
  const double final_d = curve.back();
  report.statistics = {{"max_discrepancy", final_d},
                       {"checkpoints", checkpoints},
                       {"discrepancy_curve", curve},
                       {"indicators", per}};
  report.pass = final_d <= threshold;
  report.verdict_note = report.pass ? "orbit frequencies match invariant masses"
                                    : "orbit frequencies deviate from invariant masses";
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

std::vector<IndicatorInterval> random_dyadic_indicators(std::size_t count, int max_level,
                                                        std::uint64_t seed, std::uint64_t stream) {
  if (max_level < 1 || max_level > 30) throw DomainError("dyadic level must be in [1, 30]");
  StreamRng rng(seed, stream);
  std::vector<IndicatorInterval> out(count);
  for (auto& I : out) {
    const int m = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(max_level));
    const std::uint64_t cells = std::uint64_t{1} << m;
    const std::uint64_t k = rng.next_u64() % cells;
    I.lo = std::ldexp(static_cast<double>(k), -m);
    I.hi = std::ldexp(static_cast<double>(k + 1), -m);
  }
  return out;
}

ExperimentReport typicality_experiment(const MapFamily& family, const TypicalityOptions& options,
                                       const Executor& executor) {
  const auto start = Clock::now();
  ExperimentReport report;
  report.kind = ExperimentKind::typicality;
  report.config = {{"family", describe_family(family)},
                   {"n", options.n},
                   {"samples", options.samples},
                   {"indicators", options.indicators},
                   {"max_level", options.max_level},
                   {"seed", options.seed},
                   {"threshold", options.threshold},
                   {"required_fraction", options.required_fraction},
                   {"solver", describe_solver(options.solver)}};
  const auto params = stratified_parameters(0.0, family.window(), options.samples, options.seed);
  const auto worst = executor.map<double>(options.samples, [&](std::size_t i) {
    const auto indicators = random_dyadic_indicators(
        options.indicators, options.max_level, options.seed,
        stream_id(StreamPurpose::indicator_choice, i));
    const ExperimentReport r = typicality_check(family, indicators, params[i], options.n,
                                                options.solver, options.seed ^ i, options.threshold);
    return r.verdict_applicable ? r.statistics["max_discrepancy"].get<double>() : 0.0;
  });
  std::size_t within = 0;
  for (double d : worst) within += d <= options.threshold ? 1 : 0;
  const double fraction =
      static_cast<double>(within) / static_cast<double>(std::max<std::size_t>(worst.size(), 1));
  report.statistics = {{"fraction_within", fraction},
                       {"median_max_discrepancy", quantile(worst, 0.5)},
                       {"worst_max_discrepancy", worst.empty() ? 0.0 : *std::max_element(worst.begin(), worst.end())},
                       {"samples", options.samples}};
  report.verdict_applicable = !worst.empty();
  report.pass = !worst.empty() && fraction >= options.required_fraction;
  report.verdict_note = report.pass ? "typical for most parameters" : "too many atypical parameters";
  CsvTable table{"max_discrepancy", {"sample", "a", "max_discrepancy"}, {}};
  for (std::size_t i = 0; i < worst.size(); ++i) {
    table.rows.push_back({static_cast<double>(i), params[i], worst[i]});
  }
  report.extracts.push_back(std::move(table));
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

}  // namespace pemlab
