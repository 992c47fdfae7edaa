// Acceptance run: one PASS/FAIL line per criterion. Tolerances are fixed here.
//
//   pemlab_acceptance [--expect-red=8,...] [--only=1,2,...]
//
// The exit status is 0 when every criterion that failed was listed in
// --expect-red, 1 otherwise.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pemlab/app.h"
#include "pemlab/asip.h"
#include "pemlab/config.h"
#include "pemlab/maps.h"
#include "pemlab/paramspace.h"
#include "pemlab/stats.h"
#include "pemlab/transfer.h"
#include "pemlab/valpha.h"

using namespace pemlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double l1_to_one(const std::vector<double>& h) {
  double s = 0.0;
  for (double v : h) s += std::abs(v - 1.0);
  return s / static_cast<double>(h.size());
}

// Parry density of x -> beta x mod 1, averaged over N equal cells:
// h(x) proportional to the sum over n >= 0 of beta^-n 1[x < T^n(1)].
std::vector<double> parry_cell_density(double beta, std::size_t N) {
  std::vector<double> t;
  double y = 1.0, w = 1.0;
  std::vector<double> weight;
  for (int n = 0; n < 80 && w > 1e-18; ++n) {
    t.push_back(y);
    weight.push_back(w);
    y = beta * y - std::floor(beta * y);
    if (y == 0.0) break;
    w /= beta;
  }
  std::vector<double> h(N, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double lo = static_cast<double>(i) / N, hi = static_cast<double>(i + 1) / N;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double covered = std::clamp(t[k], lo, hi) - lo;
      h[i] += weight[k] * covered * static_cast<double>(N);
    }
    total += h[i] / static_cast<double>(N);
  }
  for (double& v : h) v /= total;
  return h;
}

Outcome density_oracles() {
  using Clock = std::chrono::steady_clock;
  std::ostringstream os;
  bool ok = true;
  double worst_time = 0.0;
  const auto timed = [&](const MapFamily& f, std::size_t N) {
    const auto t0 = Clock::now();
    UlamSystem s = solved_system(f, 0.0, SolverOptions{.grid_count = N});
    worst_time = std::max(worst_time, std::chrono::duration<double>(Clock::now() - t0).count());
    return s.density();
  };
  const double tent = l1_to_one(timed(MapFamily::tent(2.0), 4096));
  const double dbl = l1_to_one(timed(MapFamily::doubling(), 4096));
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  const auto h = timed(MapFamily::beta(golden), 8192);
  const auto parry = parry_cell_density(golden, 8192);
  double beta_err = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) beta_err += std::abs(h[i] - parry[i]) / 8192.0;
  ok = tent <= 1e-3 && dbl <= 1e-3 && beta_err <= 5e-3 && worst_time < 10.0;
  os << "tent L1=" << fmt(tent) << " doubling L1=" << fmt(dbl) << " golden beta L1=" << fmt(beta_err)
     << " slowest solve " << fmt(worst_time) << " s";
  return {ok, os.str()};
}

Outcome green_kubo() {
  const MapFamily f = MapFamily::doubling();
  const VarianceResult v1 = green_kubo_sigma(f, 0.0, Observable::cos1());
  const VarianceResult v2 = green_kubo_sigma(f, 0.0, Observable::erdos_fortet());
  const UlamSystem s = solved_system(f, 0.0);
  const auto cov = autocovariances(s, Observable::erdos_fortet(), 20);
  double tail = 0.0;
  for (std::size_t k = 2; k < cov.size(); ++k) tail = std::max(tail, std::abs(cov[k]));
  const bool ok = std::abs(v1.sigma_squared - 0.5) <= 0.01 &&
                  std::abs(v2.sigma_squared - 2.0) <= 0.04 && tail < 1e-6;
  return {ok, "sigma2(cos1)=" + fmt(v1.sigma_squared) + " sigma2(ef)=" + fmt(v2.sigma_squared) +
                  " max|C_k|, k>=2: " + fmt(tail)};
}

Outcome normalization_contract() {
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  const std::vector<MapFamily> families = {MapFamily::tent(1.85), MapFamily::beta(golden),
                                           MapFamily::markov(), MapFamily::doubling()};
  const std::vector<Observable> observables = {Observable::cos1(), Observable::erdos_fortet(),
                                               Observable::indicator(0.0, 0.5),
                                               Observable::identity()};
  double worst_mean = 0.0, worst_sigma = 0.0;
  std::size_t pairs = 0;
  for (const auto& f : families) {
    for (const auto& phi : observables) {
      for (double a : {0.0, 0.5 * f.window(), f.window()}) {
        const UlamSystem s = solved_system(f, a);
        const Observable n = normalize_observable(s, phi);
        const VarianceResult v = green_kubo_sigma(s, n);
        worst_mean = std::max(worst_mean, std::abs(measure_mean(s, n)));
        worst_sigma = std::max(worst_sigma, std::abs(std::sqrt(v.sigma_squared) - 1.0));
        ++pairs;
      }
    }
  }
  return {worst_mean <= 1e-8 && worst_sigma <= 1e-6,
          std::to_string(pairs) + " (family, observable, a) cases; max|mean|=" + fmt(worst_mean) +
              " max|sigma-1|=" + fmt(worst_sigma)};
}

Outcome transversality() {
  const MapFamily dbl = MapFamily::doubling();
  bool exact = true;
  for (double a : {0.0, 0.1, 0.37, 0.5, 0.99}) {
    const auto r = transversality_ratios(dbl, a, 40);
    for (double v : r.ratios) exact = exact && v == 1.0;
  }
  const MapFamily tent = MapFamily::tent(1.9);
  double lo = 1.0, hi = 1.0;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < 64; ++i) {
    const double a = tent.window() * static_cast<double>(i) / 63.0;
    const auto r = transversality_ratios(tent, a, 40);
    for (double v : r.ratios) {
      lo = std::min(lo, std::abs(v));
      hi = std::max(hi, std::abs(v));
      ++checked;
    }
  }
  const bool ok = exact && lo >= 1.0 / 50.0 && hi <= 50.0;
  return {ok, std::string("doubling ratios exactly 1: ") + (exact ? "yes" : "no") +
                  "; tent s0=1.9 ratios in [" + fmt(lo) + ", " + fmt(hi) + "] over " +
                  std::to_string(checked) + " (a, j)"};
}

Outcome condition_sums() {
  const MapFamily dbl = MapFamily::doubling();
  double worst = 0.0;
  for (std::size_t n = 1; n <= 20; ++n) {
    const auto p = build_partition(dbl, 0.0, 1.0, n);
    worst = std::max(worst, std::abs(condition_iii_sum(p).value - 1.0));
  }
  const MapFamily tent = MapFamily::tent(1.85);
  std::vector<double> ln, ls;
  for (std::size_t n = 5; n <= 20; ++n) {
    const auto p = build_partition(tent, 0.0, tent.window(), n);
    ln.push_back(std::log(static_cast<double>(n)));
    ls.push_back(std::log(condition_iii_sum(p).value));
  }
  const auto fit = stats::least_squares(ln, ls);
  return {worst <= 1e-9 && fit.slope <= 4.0,
          "doubling max|sum-1|=" + fmt(worst) + " tent growth exponent=" + fmt(fit.slope)};
}

Outcome distortion() {
  const MapFamily tent = MapFamily::tent(1.85);
  const auto p = build_partition(tent, 0.0, tent.window(), 15);
  std::vector<double> len, excess;
  for (const auto& c : p.cells) {
    if (c.unresolved || c.image_length <= 0.0) continue;
    const double r = distortion_ratio(tent, p, c, c.a_lo, c.a_hi);
    const double d = std::max({r, 1.0 / r, c.max_deriv / c.min_deriv});
    len.push_back(c.image_length);
    excess.push_back(d - 1.0);
  }
  const auto fit = stats::least_squares_through_origin(len, excess);
  std::size_t violations = 0;
  for (std::size_t i = 0; i < len.size(); ++i) {
    if (excess[i] > 2.0 * fit.slope * len[i]) ++violations;
  }
  return {fit.r_squared >= 0.5 && violations == 0,
          std::to_string(len.size()) + " cells; C=" + fmt(fit.slope) + " R2=" + fmt(fit.r_squared) +
              " (centered " + fmt(fit.centered_r_squared) + ")" +
              " violations at 2C: " + std::to_string(violations)};
}

Outcome clt(const Executor& ex) {
  CltOptions o;
  o.n = 20000;
  o.samples = 2000;
  const auto t = clt_experiment(MapFamily::tent(1.85), Observable::cos1(), o, ex);
  const auto d = clt_experiment(MapFamily::doubling(), Observable::cos1(), o, ex);
  const double kt = t.statistics["ks_distance"], kd = d.statistics["ks_distance"];
  return {t.pass && d.pass && kt <= 0.05 && kd <= 0.05,
          "tent KS=" + fmt(kt) + " doubling KS=" + fmt(kd) + " (" +
              fmt(t.wall_clock_seconds + d.wall_clock_seconds) + " s)"};
}

Outcome lil(const Executor& ex) {
  LilOptions o;
  o.n_max = 1000000;
  o.samples = 200;
  std::ostringstream os;
  bool ok = true;
  for (const auto& [name, f] : {std::pair{"tent", MapFamily::tent(1.85)},
                                std::pair{"doubling", MapFamily::doubling()}}) {
    const auto r = lil_experiment(f, Observable::cos1(), o, ex);
    const double frac = r.statistics["fraction_in_band"], mono = r.statistics["monotone_fraction"];
    ok = ok && frac >= 0.9 && mono == 1.0;
    os << name << " in-band=" << fmt(frac) << " monotone=" << fmt(mono) << "; ";
  }
  return {ok, os.str()};
}

Outcome blocks(const Executor& ex) {
  std::vector<std::size_t> sizes;
  for (const auto& b : build_blocks(10).blocks) sizes.push_back(b.size);
  const bool sizes_ok = sizes == std::vector<std::size_t>{1, 1, 2, 2, 2, 3};
  // M(N) = j on (S_{j-1}, S_j]; the bound is tightest at the left end.
  bool m_ok = true;
  std::size_t cum = 0;
  for (std::size_t j = 1; cum + 1 <= 1000000; ++j) {
    m_ok = m_ok && static_cast<double>(j) <= 4.0 * std::pow(static_cast<double>(cum + 1), 0.6);
    cum += block_size(j);
  }
  BlockOptions o;
  o.N = 100000;
  o.samples = 100;
  const auto r = block_lln_experiment(MapFamily::tent(1.85), Observable::cos1(), o, ex);
  const double frac = r.statistics["fraction_within"];
  return {sizes_ok && m_ok && frac >= 0.9,
          std::string("sizes ") + (sizes_ok ? "ok" : "wrong") + ", M bound " + (m_ok ? "ok" : "violated") +
              ", ratio<=5 fraction=" + fmt(frac)};
}

Outcome erdos_fortet_check(const Executor& ex) {
  ErdosFortetOptions o;
  o.n = 2000;
  o.samples = 100000;
  const auto p = erdos_fortet(o, ex);
  o.variant = ErdosFortetVariant::power_minus_one;
  const auto m = erdos_fortet(o, ex);
  const double secs = std::max(p.wall_clock_seconds, m.wall_clock_seconds);
  return {p.pass && m.pass && secs < 120.0,
          "power KS=" + fmt(p.statistics["ks_distance"]) + " kurt=" +
              fmt(p.statistics["excess_kurtosis"]) + "; minus-one KS=" +
              fmt(m.statistics["ks_distance"]) + " kurt=" + fmt(m.statistics["excess_kurtosis"]) +
              " (slowest " + fmt(secs) + " s)"};
}

Outcome typicality(const Executor& ex) {
  TypicalityOptions o;
  o.n = 1000000;
  o.samples = 50;
  o.indicators = 16;
  const auto r = typicality_experiment(MapFamily::tent(1.85), o, ex);
  return {r.pass, "fraction within 5e-3: " + fmt(r.statistics["fraction_within"]) +
                      " worst=" + fmt(r.statistics["worst_max_discrepancy"])};
}

Outcome determinism() {
  // Reduced sizes; the property is about scheduling, not scale.
  const std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> runs = {
      {"density", {}},
      {"correlations", {}},
      {"variance", {{"experiment.samples", "8"}}},
      {"transversality", {{"experiment.samples", "16"}}},
      {"partition", {{"experiment.n", "10"}}},
      {"clt", {{"experiment.n", "2000"}, {"experiment.samples", "200"}, {"solver.sigma_grid", "16"}}},
      {"lil", {{"experiment.n", "20000"}, {"experiment.samples", "40"}, {"solver.sigma_grid", "16"}}},
      {"blocks", {{"experiment.n", "5000"}, {"experiment.samples", "40"}, {"solver.sigma_grid", "16"}}},
      {"erdos-fortet", {{"experiment.n", "500"}, {"experiment.samples", "2000"}}},
      {"typicality", {{"experiment.n", "20000"}, {"experiment.samples", "12"}}},
  };
  std::size_t identical = 0;
  std::string first_bad;
  for (const auto& [kind, overrides] : runs) {
    RunConfig config;
    for (const auto& [k, v] : overrides) config.set(k, v);
    std::string reference;
    bool same = true;
    for (unsigned threads : {1u, 4u, 8u}) {
      Executor ex(threads);
      const std::string text = run_experiment(kind, config, ex).to_json(false).dump(2);
      if (reference.empty()) reference = text;
      else same = same && text == reference;
    }
    if (same) ++identical;
    else if (first_bad.empty()) first_bad = kind;
  }
  return {identical == runs.size(),
          std::to_string(identical) + "/" + std::to_string(runs.size()) +
              " experiment kinds byte-identical across 1, 4, 8 threads" +
              (first_bad.empty() ? "" : "; first mismatch: " + first_bad)};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expect_red, only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg.rfind("--expect-red=", 0) == 0) expect_red = parse_list(arg.substr(13));
    else if (arg.rfind("--only=", 0) == 0) only = parse_list(arg.substr(7));
    else {
      std::cerr << "usage: pemlab_acceptance [--expect-red=LIST] [--only=LIST]\n";
      return 2;
    }
  }
  Executor ex(0);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"density oracles", density_oracles},
      {"Green-Kubo exactness", green_kubo},
      {"normalization contract", normalization_contract},
      {"transversality", transversality},
      {"condition sums", condition_sums},
      {"distortion", distortion},
      {"CLT", [&] { return clt(ex); }},
      {"LIL band", [&] { return lil(ex); }},
      {"block machinery", [&] { return blocks(ex); }},
      {"Erdos-Fortet discrimination", [&] { return erdos_fortet_check(ex); }},
      {"typicality", [&] { return typicality(ex); }},
      {"determinism", determinism},
  };
  bool unexpected = false;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const bool red = expect_red.count(id) != 0;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
              << "): " << o.detail;
    if (!o.pass && red) std::cout << " [known red]";
    std::cout << std::endl;
    if (!o.pass && !red) unexpected = true;
  }
  return unexpected ? 1 : 0;
}
