#include "pemlab/app.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "pemlab/error.h"
#include "pemlab/paramspace.h"
#include "pemlab/stats.h"
#include "pemlab/transfer.h"
#include "text.h"

namespace pemlab {

namespace {

nlohmann::json config_snapshot(const RunConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : config.entries()) {
    if (k.rfind("output.", 0) == 0) continue;
    j[k] = v;
  }
  return j;
}

ExperimentReport plain_report(std::string label, const RunConfig& config) {
  ExperimentReport r;
  r.kind_label = std::move(label);
  r.verdict_applicable = false;
  r.pass = true;
  r.verdict_note = "no verdict";
  r.config = {{"family", describe_family(config.family())}};
  return r;
}

ExperimentReport density_report(const RunConfig& config) {
  ExperimentReport r = plain_report("density", config);
  const MapFamily family = config.family();
  const double a = config.real("experiment.a");
  const UlamSystem system = solved_system(family, a, config.solver());
  const auto& h = system.density();
  const double n = static_cast<double>(h.size());
  double l1_uniform = 0.0;
  std::size_t support = 0;
  for (double v : h) {
    l1_uniform += std::abs(v - 1.0) / n;
    if (v > 0.0) ++support;
  }
  r.statistics = {{"a", a},
                  {"grid_count", h.size()},
                  {"iterations", system.iterations()},
                  {"residual", system.residual()},
                  {"min_density", *std::min_element(h.begin(), h.end())},
                  {"max_density", *std::max_element(h.begin(), h.end())},
                  {"support_fraction", static_cast<double>(support) / n},
                  {"l1_distance_to_uniform", l1_uniform}};
  CsvTable t{"density", {"cell_midpoint", "density"}, {}};
  for (std::size_t i = 0; i < h.size(); ++i) t.rows.push_back({(i + 0.5) / n, h[i]});
  r.extracts.push_back(std::move(t));
  return r;
}

ExperimentReport correlations_report(const RunConfig& config) {
  ExperimentReport r = plain_report("correlations", config);
  const MapFamily family = config.family();
  const Observable phi = config.observable();
  const double a = config.real("experiment.a");
  const UlamSystem system = solved_system(family, a, config.solver());
  const auto cov = autocovariances(system, phi, config.count("experiment.n"));
  r.config["observable"] = phi.describe();
  r.statistics = {{"a", a}, {"autocovariances", cov}};
  try {
    const DecayFit fit = decay_rate(cov);
    r.statistics["decay_rate"] = fit.rho;
    r.statistics["decay_r_squared"] = fit.r_squared;
    r.statistics["decay_lags_used"] = fit.lags_used;
  } catch (const InsufficientDataError& e) {
    r.statistics["decay_rate"] = nullptr;
    r.statistics["decay_note"] = e.what();
  }
  CsvTable t{"autocovariances", {"lag", "autocovariance"}, {}};
  for (std::size_t k = 0; k < cov.size(); ++k) t.rows.push_back({static_cast<double>(k), cov[k]});
  r.extracts.push_back(std::move(t));
  return r;
}

ExperimentReport variance_report(const RunConfig& config, const Executor& executor) {
  ExperimentReport r = plain_report("variance", config);
  const MapFamily family = config.family();
  const Observable phi = config.observable();
  const SolverOptions solver = config.solver();
  const double a = config.real("experiment.a");
  const VarianceResult v = green_kubo_sigma(family, a, phi, solver);
  r.config["observable"] = phi.describe();
  r.statistics = {{"a", a},
                  {"sigma_squared", v.sigma_squared},
                  {"mean", v.mean},
                  {"truncation_K", v.truncation_K},
                  {"trusted", v.trusted},
                  {"decay_rate", v.rho_fit ? nlohmann::json(*v.rho_fit) : nlohmann::json(nullptr)}};
  CsvTable t{"autocovariances", {"lag", "autocovariance"}, {}};
  for (std::size_t k = 0; k < v.autocovariances.size(); ++k) {
    t.rows.push_back({static_cast<double>(k), v.autocovariances[k]});
  }
  r.extracts.push_back(std::move(t));

  const std::size_t points = config.count("experiment.samples");
  if (!family.constant_in_a() && family.window() > 0.0 && points >= 2) {
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) {
      grid[i] = family.window() * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    const SigmaScan scan = sigma_scan(family, phi, grid, solver, config.real("experiment.kappa"), executor);
    r.statistics["holder_quotient"] =
        scan.holder_quotient ? nlohmann::json(*scan.holder_quotient) : nlohmann::json(nullptr);
    CsvTable s{"sigma_scan", {"a", "sigma", "mean"}, {}};
    for (std::size_t i = 0; i < scan.a.size(); ++i) s.rows.push_back({scan.a[i], scan.sigma[i], scan.mean[i]});
    r.extracts.push_back(std::move(s));
  }
  return r;
}

ExperimentReport transversality_report(const RunConfig& config, const Executor& executor) {
  ExperimentReport r = plain_report("transversality", config);
  const MapFamily family = config.family();
  const std::size_t j_max = config.count("experiment.n");
  const std::size_t points = std::max<std::size_t>(config.count("experiment.samples"), 1);
  std::vector<double> grid(points, 0.0);
  for (std::size_t i = 0; points > 1 && i < points; ++i) {
    grid[i] = family.window() * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  const auto reports = executor.map<TransversalityReport>(
      points, [&](std::size_t i) { return transversality_ratios(family, grid[i], j_max); });
  double worst = 1.0;
  std::size_t truncated = 0;
  CsvTable t{"ratios", {"a", "j", "ratio"}, {}};
  for (const auto& rep : reports) {
    worst = std::max(worst, rep.bound_C);
    if (rep.truncated_at) ++truncated;
    for (std::size_t j = 0; j < rep.ratios.size(); ++j) {
      t.rows.push_back({rep.a, static_cast<double>(j + 1), rep.ratios[j]});
    }
  }
  r.statistics = {{"j_max", j_max}, {"parameters", points}, {"bound_C", worst},
                  {"truncated_parameters", truncated}};
  r.extracts.push_back(std::move(t));
  return r;
}

ExperimentReport partition_report(const RunConfig& config, const Executor& executor) {
  ExperimentReport r = plain_report("partition", config);
  const MapFamily family = config.family();
  const std::size_t depth = config.count("experiment.n");
  const double j_lo = config.real("experiment.j_lo"), j_hi = config.real("experiment.j_hi");
  // K(a) is the support mask of the density solved at the cell's own parameter.
  // When probes at both ends and the middle of J show full support, the
  // per-cell solves are skipped.
  SolverOptions solver = config.solver();
  solver.grid_count = std::min<std::size_t>(solver.grid_count, 1024);
  const auto full_support = [&](double a) {
    const UlamSystem system = solved_system(family, a, solver);
    const auto& m = system.support_mask();
    return std::all_of(m.begin(), m.end(), [](bool b) { return b; });
  };
  PartitionOptions options;
  if (!(full_support(j_lo) && full_support(0.5 * (j_lo + j_hi)) && full_support(j_hi))) {
    static std::atomic<std::uint64_t> next_token{0};
    const std::uint64_t token = ++next_token;
    options.support = [&family, solver, token](double a, double x) {
      struct Last {
        std::uint64_t token = 0;
        double a = 0.0;
        std::shared_ptr<const UlamSystem> system;
      };
      thread_local Last last;
      if (last.token != token || last.a != a || !last.system) {
        last = {token, a, std::make_shared<const UlamSystem>(solved_system(family, a, solver))};
      }
      const auto& mask = last.system->support_mask();
      const auto cell = std::min(static_cast<std::size_t>(x * static_cast<double>(mask.size())),
                                 mask.size() - 1);
      return static_cast<bool>(mask[cell]);
    };
  }
  const ParameterPartition p = build_partition(family, j_lo, j_hi, depth, options, executor);
  std::size_t exits = 0;
  for (const auto& c : p.cells) exits += c.exits_support ? 1 : 0;
  const ConditionSum sum = condition_iii_sum(p);
  const double d = config.real("experiment.image_threshold");
  r.statistics = {{"depth", depth},
                  {"cells", p.cells.size()},
                  {"unresolved", p.unresolved_count},
                  {"cells_exiting_support", exits},
                  {"condition_sum", sum.value},
                  {"condition_sum_is_lower_bound", sum.lower_bound},
                  {"small_image_threshold", d},
                  {"small_image_length", small_image_fraction(p, d)}};
  CsvTable t{"cells",
             {"a_lo", "a_hi", "min_deriv", "max_deriv", "image_length", "unresolved", "exits_support"},
             {}};
  for (const auto& c : p.cells) {
    t.rows.push_back({c.a_lo, c.a_hi, c.min_deriv, c.max_deriv, c.image_length,
                      c.unresolved ? 1.0 : 0.0, c.exits_support ? 1.0 : 0.0});
  }
  r.extracts.push_back(std::move(t));
  return r;
}

}  // namespace

ExperimentReport run_experiment(std::string_view kind, const RunConfig& input,
                                const Executor& executor) {
  const RunConfig config = input.resolved(kind);
  const std::uint64_t seed = config.seed();
  ExperimentReport report;
  if (kind == "density") {
    report = density_report(config);
  } else if (kind == "correlations") {
    report = correlations_report(config);
  } else if (kind == "variance") {
    report = variance_report(config, executor);
  } else if (kind == "transversality") {
    report = transversality_report(config, executor);
  } else if (kind == "partition") {
    report = partition_report(config, executor);
  } else if (kind == "clt") {
    CltOptions o;
    o.n = config.count("experiment.n");
    o.samples = config.count("experiment.samples");
    o.seed = seed;
    o.ks_threshold = config.real("experiment.ks_threshold");
    o.min_samples = config.count("experiment.min_samples");
    o.normalizer = config.normalizer();
    report = clt_experiment(config.family(), config.observable(), o, executor);
  } else if (kind == "lil") {
    LilOptions o;
    o.n_max = config.count("experiment.n");
    o.samples = config.count("experiment.samples");
    o.checkpoint_base = config.real("experiment.checkpoint_base");
    o.seed = seed;
    o.band_lo = config.real("experiment.band_lo");
    o.band_hi = config.real("experiment.band_hi");
    o.required_fraction = config.real("experiment.required_fraction");
    o.normalizer = config.normalizer();
    report = lil_experiment(config.family(), config.observable(), o, executor);
  } else if (kind == "blocks") {
    BlockOptions o;
    o.N = config.count("experiment.n");
    o.samples = config.count("experiment.samples");
    o.gamma = config.real("experiment.gamma");
    o.delta = config.real("experiment.delta");
    o.seed = seed;
    o.ratio_max = config.real("experiment.ratio_max");
    o.required_fraction = config.real("experiment.required_fraction");
    o.normalizer = config.normalizer();
    report = block_lln_experiment(config.family(), config.observable(), o, executor);
  } else if (kind == "erdos-fortet") {
    ErdosFortetOptions o;
    o.n = config.count("experiment.n");
    o.samples = config.count("experiment.samples");
    o.variant = config.text("experiment.variant") == "power" ? ErdosFortetVariant::power
                                                             : ErdosFortetVariant::power_minus_one;
    o.seed = seed;
    o.ks_threshold = config.real("experiment.ks_threshold");
    o.kurtosis_threshold = config.real("experiment.kurtosis_threshold");
    o.reject_ks = config.real("experiment.reject_ks");
    o.reject_kurtosis = config.real("experiment.reject_kurtosis");
    report = erdos_fortet(o, executor);
  } else if (kind == "typicality") {
    TypicalityOptions o;
    o.n = config.count("experiment.n");
    o.samples = config.count("experiment.samples");
    o.indicators = config.count("experiment.indicators");
    o.max_level = static_cast<int>(config.count("experiment.max_level"));
    o.seed = seed;
    o.threshold = config.real("experiment.threshold");
    o.required_fraction = config.real("experiment.required_fraction");
    o.solver = config.solver();
    report = typicality_experiment(config.family(), o, executor);
  } else {
    throw ConfigError("unknown subcommand '" + std::string(kind) + "'");
  }
  report.config["run_config"] = config_snapshot(config);
  return report;
}

namespace {

std::string summary_line(std::string_view kind, const ExperimentReport& r, const std::string& path) {
  std::ostringstream os;
  os << kind << ": ";
  if (!r.verdict_applicable) os << "DONE";
  else os << (r.pass ? "PASS" : "FAIL");
  os << " (" << r.verdict_note << ")";
  for (const char* key : {"ks_distance", "fraction_in_band", "fraction_within", "sigma_squared",
                          "bound_C", "condition_sum", "l1_distance_to_uniform", "excess_kurtosis"}) {
    if (r.statistics.contains(key) && r.statistics[key].is_number()) {
      os << ' ' << key << '=' << detail::format_double(r.statistics[key].get<double>());
    }
  }
  os << " -> " << path;
  return os.str();
}

int run_one(std::string_view kind, RunConfig config, const RunOptions& options,
            const Executor& executor, std::ostream& out, std::ostream& err) {
  try {
    if (options.seed) config.set("experiment.seed", std::to_string(*options.seed));
    if (options.out_dir) config.set("output.dir", *options.out_dir);
    const RunConfig resolved = config.resolved(kind);
    const ExperimentReport report = run_experiment(kind, resolved, executor);

    const std::filesystem::path dir = resolved.text("output.dir");
    std::filesystem::create_directories(dir);
    const std::string stem =
        std::string(kind) + "-" + resolved.hash8() + "-" + std::to_string(resolved.seed());
    const auto formats = resolved.output_formats();
    const auto wants = [&](const char* f) {
      return std::find(formats.begin(), formats.end(), f) != formats.end();
    };
    std::string primary = (dir / stem).string();
    if (wants("json")) {
      const auto path = dir / (stem + ".json");
      std::ofstream f(path, std::ios::binary);
      f << report.to_json(options.include_wall_clock).dump(2) << '\n';
      if (!f) throw Error("cannot write " + path.string());
      primary = path.string();
    }
    if (wants("csv")) {
      for (std::size_t i = 0; i < report.extracts.size(); ++i) {
        const auto& table = report.extracts[i];
        const auto path = dir / (i == 0 ? stem + ".csv" : stem + "." + table.name + ".csv");
        std::ofstream f(path, std::ios::binary);
        write_csv(f, table);
        if (!f) throw Error("cannot write " + path.string());
      }
    }
    out << summary_line(kind, report, primary) << '\n';
    if (report.verdict_applicable && !report.pass) return kExitFail;
    return kExitPass;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
}

}  // namespace

int run(std::string_view subcommand, const RunConfig& config, const RunOptions& options,
        std::ostream& out, std::ostream& err) {
  if (subcommand != "all" && !is_experiment_kind(subcommand)) {
    err << "error: unknown subcommand '" << subcommand << "'\n";
    return kExitConfig;
  }
  Executor executor(options.threads);
  if (subcommand != "all") return run_one(subcommand, config, options, executor, out, err);
  int worst = kExitPass;
  for (std::string_view kind : kExperimentKinds) {
    const int code = run_one(kind, config, options, executor, out, err);
    // Configuration problems outrank domain errors, which outrank failed verdicts.
    const auto rank = [](int c) { return c == kExitConfig ? 3 : c == kExitDomain ? 2 : c; };
    if (rank(code) > rank(worst)) worst = code;
  }
  return worst;
}

int validate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig resolved = config.resolved();
    (void)resolved.family();
    (void)resolved.observable();
    out << resolved.serialize();
    return kExitPass;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
}

}  // namespace pemlab
