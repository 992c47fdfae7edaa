#include "pemlab/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "pemlab/error.h"
#include "text.h"

namespace pemlab {

namespace {

enum class Type { real, count, seed, text };

struct Field {
  Type type;
  std::vector<std::string_view> choices;  // empty: any value of the type
};

const std::map<std::string, Field>& schema() {
  static const std::map<std::string, Field> s = {
      {"family.kind", {Type::text, {"tent_slope", "beta", "markov_full_branch", "constant_doubling"}}},
      {"family.base", {Type::real, {}}},
      {"family.window", {Type::real, {}}},
      {"family.x0.kind", {Type::text, {"critical_value", "identity", "affine", "constant"}}},
      {"family.x0.anchor", {Type::real, {}}},
      {"family.x0.slope", {Type::real, {}}},
      {"observable.preset", {Type::text, {"cos1", "erdos_fortet", "indicator", "identity", "custom"}}},
      {"observable.terms", {Type::text, {}}},
      {"observable.p", {Type::real, {}}},
      {"observable.q", {Type::real, {}}},
      {"observable.alpha", {Type::real, {}}},
      {"observable.A", {Type::real, {}}},
      {"solver.grid_count", {Type::count, {}}},
      {"solver.tolerance", {Type::real, {}}},
      {"solver.max_iterations", {Type::count, {}}},
      {"solver.support_threshold", {Type::real, {}}},
      {"solver.gk_tolerance", {Type::real, {}}},
      {"solver.max_lag", {Type::count, {}}},
      {"solver.sigma_grid", {Type::count, {}}},
      {"solver.holdout", {Type::count, {}}},
      {"solver.max_interpolation_error", {Type::real, {}}},
      {"experiment.kind",
       {Type::text, {std::begin(kExperimentKinds), std::end(kExperimentKinds)}}},
      {"experiment.seed", {Type::seed, {}}},
      {"experiment.a", {Type::real, {}}},
      {"experiment.n", {Type::count, {}}},
      {"experiment.samples", {Type::count, {}}},
      {"experiment.kappa", {Type::real, {}}},
      {"experiment.j_lo", {Type::real, {}}},
      {"experiment.j_hi", {Type::real, {}}},
      {"experiment.image_threshold", {Type::real, {}}},
      {"experiment.ks_threshold", {Type::real, {}}},
      {"experiment.min_samples", {Type::count, {}}},
      {"experiment.checkpoint_base", {Type::real, {}}},
      {"experiment.band_lo", {Type::real, {}}},
      {"experiment.band_hi", {Type::real, {}}},
      {"experiment.required_fraction", {Type::real, {}}},
      {"experiment.gamma", {Type::real, {}}},
      {"experiment.delta", {Type::real, {}}},
      {"experiment.ratio_max", {Type::real, {}}},
      {"experiment.variant", {Type::text, {"power", "power_minus_one"}}},
      {"experiment.kurtosis_threshold", {Type::real, {}}},
      {"experiment.reject_ks", {Type::real, {}}},
      {"experiment.reject_kurtosis", {Type::real, {}}},
      {"experiment.indicators", {Type::count, {}}},
      {"experiment.max_level", {Type::count, {}}},
      {"experiment.threshold", {Type::real, {}}},
      {"output.dir", {Type::text, {}}},
      {"output.formats", {Type::text, {}}},
  };
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> to_real(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::optional<std::uint64_t> to_unsigned(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return v;
  // Accept integral reals such as 1e6.
  const auto r = to_real(s);
  if (r && *r >= 0.0 && *r < 1.8e19 && std::floor(*r) == *r) {
    return static_cast<std::uint64_t>(*r);
  }
  return std::nullopt;
}

using Entries = std::map<std::string, std::string>;

// Per-kind experiment defaults. Values depend on the resolved family window.
Entries experiment_defaults(std::string_view kind, double window) {
  const std::string w = detail::format_double(window);
  if (kind == "density") return {{"experiment.a", "0"}};
  if (kind == "correlations") return {{"experiment.a", "0"}, {"experiment.n", "50"}};
  if (kind == "variance") {
    return {{"experiment.a", "0"}, {"experiment.samples", "16"}, {"experiment.kappa", "0.5"}};
  }
  if (kind == "transversality") return {{"experiment.n", "40"}, {"experiment.samples", "64"}};
  if (kind == "partition") {
    return {{"experiment.n", "15"},
            {"experiment.j_lo", "0"},
            {"experiment.j_hi", w},
            {"experiment.image_threshold", "0.001"}};
  }
  if (kind == "clt") {
    return {{"experiment.n", "20000"},
            {"experiment.samples", "2000"},
            {"experiment.ks_threshold", "0.05"},
            {"experiment.min_samples", "100"}};
  }
  if (kind == "lil") {
    return {{"experiment.n", "1000000"},     {"experiment.samples", "200"},
            {"experiment.checkpoint_base", "1.5"}, {"experiment.band_lo", "0.5"},
            {"experiment.band_hi", "1.5"},   {"experiment.required_fraction", "0.9"}};
  }
  if (kind == "blocks") {
    return {{"experiment.n", "100000"},  {"experiment.samples", "100"},
            {"experiment.gamma", "0.41"}, {"experiment.delta", "0.3"},
            {"experiment.ratio_max", "5"}, {"experiment.required_fraction", "0.9"}};
  }
  if (kind == "erdos-fortet") {
    return {{"experiment.n", "2000"},
            {"experiment.samples", "100000"},
            {"experiment.variant", "power"},
            {"experiment.ks_threshold", "0.02"},
            {"experiment.kurtosis_threshold", "0.15"},
            {"experiment.reject_ks", "0.03"},
            {"experiment.reject_kurtosis", "0.3"}};
  }
  if (kind == "typicality") {
    return {{"experiment.n", "1000000"},      {"experiment.samples", "50"},
            {"experiment.indicators", "16"},  {"experiment.max_level", "6"},
            {"experiment.threshold", "0.005"}, {"experiment.required_fraction", "0.95"}};
  }
  return {};
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

bool is_experiment_kind(std::string_view kind) {
  return std::find(std::begin(kExperimentKinds), std::end(kExperimentKinds), kind) !=
         std::end(kExperimentKinds);
}

RunConfig RunConfig::parse(std::string_view text, std::string origin) {
  RunConfig c;
  c.origin_ = std::move(origin);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string at = c.origin_ + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(at + "expected `key = value`");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(at + "missing key before `=`");
    if (!schema().count(key)) throw ConfigError(at + key + ": unknown field");
    if (c.entries_.count(key)) throw ConfigError(at + key + ": duplicate field");
    c.entries_[key] = value;
    c.lines_[key] = line_no;
  }
  if (c.entries_.empty()) throw ConfigError(c.origin_ + ": configuration is empty");
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open configuration file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!schema().count(key)) throw ConfigError("override " + key + ": unknown field");
  entries_[key] = trim(value);
  lines_.erase(key);
}

std::string RunConfig::where(const std::string& key) const {
  const auto it = lines_.find(key);
  if (it == lines_.end()) return key;
  return origin_ + ":" + std::to_string(it->second) + ": " + key;
}

RunConfig RunConfig::resolved(std::string_view kind) const {
  RunConfig r = *this;
  auto& e = r.entries_;
  const auto fill = [&](const std::string& key, const std::string& value) {
    if (!e.count(key)) e[key] = value;
  };
  const auto fail = [&](const std::string& key, const std::string& what) -> ConfigError {
    return ConfigError(r.where(key) + ": " + what);
  };

  if (!kind.empty()) e["experiment.kind"] = std::string(kind);
  fill("experiment.kind", "clt");
  if (!is_experiment_kind(e["experiment.kind"])) {
    throw fail("experiment.kind", "unknown experiment kind '" + e["experiment.kind"] + "'");
  }

  fill("family.kind", "tent_slope");
  const auto fk = parse_family_kind(e["family.kind"]);
  if (!fk) throw fail("family.kind", "unknown family kind '" + e["family.kind"] + "'");
  e["family.kind"] = std::string(to_string(*fk));

  // Numeric normalisation happens below; family defaults need the base first.
  double base = 0.0;
  switch (*fk) {
    case FamilyKind::tent_slope: base = 1.85; break;
    case FamilyKind::beta: base = std::numbers::phi; break;
    case FamilyKind::markov_full_branch: base = 0.1; break;
    case FamilyKind::constant_doubling: base = 2.0; break;
  }
  if (e.count("family.base")) {
    const auto v = to_real(e["family.base"]);
    if (!v) throw fail("family.base", "expected a number, got '" + e["family.base"] + "'");
    base = *v;
  }
  e["family.base"] = detail::format_double(base);

  double window = 0.0;
  switch (*fk) {
    case FamilyKind::tent_slope: window = std::max(0.0, std::min(0.1, 2.0 - base)); break;
    case FamilyKind::beta:
    case FamilyKind::markov_full_branch: window = 0.05; break;
    case FamilyKind::constant_doubling: window = 1.0; break;
  }
  if (e.count("family.window")) {
    const auto v = to_real(e["family.window"]);
    if (!v) throw fail("family.window", "expected a number, got '" + e["family.window"] + "'");
    window = *v;
  }
  e["family.window"] = detail::format_double(window);

  X0Spec x0 = X0Spec::identity();
  switch (*fk) {
    case FamilyKind::tent_slope: x0 = X0Spec::critical_value(); break;
    case FamilyKind::beta:
    case FamilyKind::markov_full_branch: x0 = X0Spec::affine(0.2, 10.0); break;
    case FamilyKind::constant_doubling: x0 = X0Spec::identity(); break;
  }
  fill("family.x0.kind", std::string(to_string(x0.kind)));
  fill("family.x0.anchor", detail::format_double(x0.anchor));
  fill("family.x0.slope", detail::format_double(x0.slope));

  fill("observable.preset", "cos1");
  fill("observable.terms", "cos:1:1");
  fill("observable.p", "0");
  fill("observable.q", "0.5");
  fill("observable.alpha", "1");
  fill("observable.A", "0.25");

  const SolverOptions so;
  const NormalizerOptions no;
  fill("solver.grid_count", std::to_string(so.grid_count));
  fill("solver.tolerance", detail::format_double(so.tolerance));
  fill("solver.max_iterations", std::to_string(so.max_iterations));
  fill("solver.support_threshold", detail::format_double(so.support_threshold));
  fill("solver.gk_tolerance", detail::format_double(so.gk_tolerance));
  fill("solver.max_lag", std::to_string(so.max_lag));
  fill("solver.sigma_grid", std::to_string(no.sigma_grid));
  fill("solver.holdout", std::to_string(no.holdout));
  fill("solver.max_interpolation_error", detail::format_double(no.max_interpolation_error));

  fill("experiment.seed", "1");
  for (const auto& [k, v] : experiment_defaults(e["experiment.kind"], window)) fill(k, v);

  fill("output.dir", "out");
  fill("output.formats", "json,csv");

  for (auto& [key, value] : e) {
    const Field& f = schema().at(key);
    switch (f.type) {
      case Type::real: {
        const auto v = to_real(value);
        if (!v) throw fail(key, "expected a number, got '" + value + "'");
        value = detail::format_double(*v);
        break;
      }
      case Type::count:
      case Type::seed: {
        const auto v = to_unsigned(value);
        if (!v) throw fail(key, "expected a nonnegative integer, got '" + value + "'");
        value = std::to_string(*v);
        break;
      }
      case Type::text:
        if (!f.choices.empty() &&
            std::find(f.choices.begin(), f.choices.end(), value) == f.choices.end()) {
          throw fail(key, "unknown value '" + value + "'");
        }
        break;
    }
  }
  if (e["observable.preset"] == "custom") {
    try {
      (void)parse_terms(e["observable.terms"]);
    } catch (const ConfigError& err) {
      throw fail("observable.terms", err.what());
    }
  }
  for (const auto& fmt : r.output_formats()) {
    if (fmt != "json" && fmt != "csv") throw fail("output.formats", "unknown format '" + fmt + "'");
  }
  return r;
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

std::string RunConfig::hash8() const {
  std::string text;
  for (const auto& [k, v] : entries_) {
    if (k == "experiment.seed" || k.rfind("output.", 0) == 0) continue;
    text += k + " = " + v + "\n";
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(text)));
  return std::string(buf, 8);
}

std::string RunConfig::text(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(key + ": missing field");
  return it->second;
}

double RunConfig::real(const std::string& key) const {
  const auto v = to_real(text(key));
  if (!v) throw ConfigError(where(key) + ": expected a number");
  return *v;
}

std::size_t RunConfig::count(const std::string& key) const {
  const auto v = to_unsigned(text(key));
  if (!v) throw ConfigError(where(key) + ": expected a nonnegative integer");
  return static_cast<std::size_t>(*v);
}

std::uint64_t RunConfig::seed() const {
  const auto v = to_unsigned(text("experiment.seed"));
  if (!v) throw ConfigError(where("experiment.seed") + ": expected a nonnegative integer");
  return *v;
}

MapFamily RunConfig::family() const {
  const auto kind = parse_family_kind(text("family.kind"));
  const auto x0_kind = parse_x0_kind(text("family.x0.kind"));
  if (!kind) throw ConfigError(where("family.kind") + ": unknown family kind");
  if (!x0_kind) throw ConfigError(where("family.x0.kind") + ": unknown x0 kind");
  const X0Spec x0{*x0_kind, real("family.x0.anchor"), real("family.x0.slope")};
  return MapFamily::make(*kind, real("family.base"), real("family.window"), x0);
}

Observable RunConfig::observable() const {
  const std::string preset = text("observable.preset");
  const double alpha = real("observable.alpha");
  const double A = real("observable.A");
  Observable phi = Observable::cos1();
  if (preset == "erdos_fortet") phi = Observable::erdos_fortet();
  else if (preset == "indicator") phi = Observable::indicator(real("observable.p"), real("observable.q"));
  else if (preset == "identity") phi = Observable::identity();
  else if (preset == "custom") phi = Observable::closed_form(parse_terms(text("observable.terms")));
  else if (preset != "cos1") throw ConfigError(where("observable.preset") + ": unknown preset");
  return phi.with_constants(alpha, A);
}

SolverOptions RunConfig::solver() const {
  SolverOptions s;
  s.grid_count = count("solver.grid_count");
  s.tolerance = real("solver.tolerance");
  s.max_iterations = count("solver.max_iterations");
  s.support_threshold = real("solver.support_threshold");
  s.gk_tolerance = real("solver.gk_tolerance");
  s.max_lag = count("solver.max_lag");
  return s;
}

NormalizerOptions RunConfig::normalizer() const {
  NormalizerOptions n;
  n.solver = solver();
  n.sigma_grid = count("solver.sigma_grid");
  n.holdout = count("solver.holdout");
  n.max_interpolation_error = real("solver.max_interpolation_error");
  return n;
}

std::vector<std::string> RunConfig::output_formats() const {
  std::vector<std::string> out;
  std::stringstream ss(text("output.formats"));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Term> parse_terms(std::string_view text) {
  std::vector<Term> terms;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::vector<std::string> parts;
    std::stringstream ps(item);
    std::string part;
    while (std::getline(ps, part, ':')) parts.push_back(trim(part));
    const auto num = [&](std::size_t i, double fallback) {
      if (i >= parts.size()) return fallback;
      const auto v = to_real(parts[i]);
      if (!v) throw ConfigError("bad number '" + parts[i] + "' in term '" + item + "'");
      return *v;
    };
    const auto need = [&](std::size_t lo, std::size_t hi) {
      if (parts.size() < lo || parts.size() > hi) {
        throw ConfigError("wrong number of fields in term '" + item + "'");
      }
    };
    const auto harmonic = [&]() {
      const double k = num(1, 1.0);
      if (std::floor(k) != k || k < 0 || k > 1e6) {
        throw ConfigError("frequency must be a nonnegative integer in term '" + item + "'");
      }
      return static_cast<int>(k);
    };
    const std::string& tag = parts.front();
    if (tag == "const") {
      need(2, 2);
      terms.push_back(Term::constant(num(1, 1.0)));
    } else if (tag == "linear") {
      need(1, 2);
      terms.push_back(Term::linear(num(1, 1.0)));
    } else if (tag == "cos") {
      need(2, 3);
      terms.push_back(Term::cosine(harmonic(), num(2, 1.0)));
    } else if (tag == "sin") {
      need(2, 3);
      terms.push_back(Term::sine(harmonic(), num(2, 1.0)));
    } else if (tag == "ind") {
      need(3, 4);
      terms.push_back(Term::indicator(num(1, 0.0), num(2, 1.0), num(3, 1.0)));
    } else if (tag == "bump") {
      need(3, 4);
      terms.push_back(Term::holder_bump(num(1, 0.5), num(2, 1.0), num(3, 1.0)));
    } else {
      throw ConfigError("unknown term kind '" + tag + "'");
    }
  }
  if (terms.empty()) throw ConfigError("observable needs at least one term");
  return terms;
}

}  // namespace pemlab
