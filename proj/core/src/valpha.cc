#include "pemlab/valpha.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "pemlab/error.h"

namespace pemlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Smallest radius of the ladder and its growth factor. The ladder is the set
// {kLadderFloor * kLadderRatio^j} cut at A, so ladders for different A are
// nested and the supremum can only grow with A.
constexpr double kLadderFloor = 0.25 / 32768.0;
const double kLadderRatio = std::pow(2.0, 15.0 / 31.0);

double term_value(const Term& t, double x) {
  switch (t.kind) {
    case Term::Kind::constant: return t.coef;
    case Term::Kind::linear: return t.coef * x;
    case Term::Kind::cosine: return t.coef * std::cos(kTwoPi * t.k * x);
    case Term::Kind::sine: return t.coef * std::sin(kTwoPi * t.k * x);
    case Term::Kind::indicator: return (x >= t.p && x <= t.q) ? t.coef : 0.0;
    case Term::Kind::holder_bump: return t.coef * std::pow(std::abs(x - t.p), t.q);
  }
  return 0.0;
}

// Integral of a term over [lo, hi].
double term_integral(const Term& t, double lo, double hi) {
  switch (t.kind) {
    case Term::Kind::constant: return t.coef * (hi - lo);
    case Term::Kind::linear: return t.coef * 0.5 * (hi - lo) * (hi + lo);
    case Term::Kind::cosine: {
      // sin B - sin A written as a product to avoid cancellation on short cells.
      const double w = kTwoPi * t.k;
      return t.coef * 2.0 * std::cos(0.5 * w * (hi + lo)) * std::sin(0.5 * w * (hi - lo)) / w;
    }
    case Term::Kind::sine: {
      const double w = kTwoPi * t.k;
      return t.coef * 2.0 * std::sin(0.5 * w * (hi + lo)) * std::sin(0.5 * w * (hi - lo)) / w;
    }
    case Term::Kind::indicator:
      return t.coef * std::max(0.0, std::min(hi, t.q) - std::max(lo, t.p));
    case Term::Kind::holder_bump: {
      const auto anti = [&](double x) {
        const double d = x - t.p;
        return std::copysign(std::pow(std::abs(d), t.q + 1.0), d) / (t.q + 1.0);
      };
      return t.coef * (anti(hi) - anti(lo));
    }
  }
  return 0.0;
}

// Points where a term attains a local extremum or has a kink.
void term_critical_points(const Term& t, std::vector<double>& out) {
  switch (t.kind) {
    case Term::Kind::cosine:
    case Term::Kind::sine: {
      const double shift = t.kind == Term::Kind::sine ? 0.5 : 0.0;
      const int k = std::abs(t.k);
      if (k == 0) return;
      for (int m = 0; m <= 2 * k; ++m) out.push_back((m + shift) / (2.0 * k));
      break;
    }
    case Term::Kind::holder_bump:
      out.push_back(t.p);
      break;
    default:
      break;
  }
}

void check_constants(double alpha, double window_A) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("Hoelder exponent must lie in (0,1]");
  if (!(window_A > 0.0)) throw DomainError("window constant A must be positive");
}

}  // namespace

Observable Observable::closed_form(std::vector<Term> terms, double alpha, double window_A) {
  check_constants(alpha, window_A);
  for (const Term& t : terms) {
    if (t.kind == Term::Kind::indicator && !(t.p <= t.q)) {
      throw DomainError("indicator needs p <= q");
    }
    if (t.kind == Term::Kind::holder_bump && !(t.q > 0.0)) {
      throw DomainError("Hoelder bump needs a positive exponent");
    }
  }
  Observable obs;
  obs.kind_ = Kind::closed_form;
  obs.terms_ = std::move(terms);
  obs.alpha_ = alpha;
  obs.window_A_ = window_A;
  return obs;
}

Observable Observable::table(std::vector<double> values, TableRule rule, double alpha,
                             double window_A) {
  check_constants(alpha, window_A);
  if (values.empty() || (rule == TableRule::linear && values.size() < 2)) {
    throw DomainError("table observable needs at least one cell (two nodes when linear)");
  }
  Observable obs;
  obs.kind_ = Kind::piecewise_table;
  obs.values_ = std::move(values);
  obs.rule_ = rule;
  obs.alpha_ = alpha;
  obs.window_A_ = window_A;
  obs.build_range_tables();
  return obs;
}

Observable Observable::erdos_fortet() {
  return closed_form({Term::cosine(1), Term::cosine(2)});
}
Observable Observable::cos1() { return closed_form({Term::cosine(1)}); }
Observable Observable::indicator(double p, double q) {
  return closed_form({Term::indicator(p, q)});
}
Observable Observable::constant(double c) { return closed_form({Term::constant(c)}); }
Observable Observable::identity() { return closed_form({Term::linear(1.0)}); }

Observable Observable::with_constants(double alpha, double window_A) const {
  check_constants(alpha, window_A);
  Observable out = *this;
  out.alpha_ = alpha;
  out.window_A_ = window_A;
  return out;
}

Observable Observable::scaled(double c) const {
  if (kind_ == Kind::closed_form) {
    std::vector<Term> terms = terms_;
    for (Term& t : terms) t.coef *= c;
    return closed_form(std::move(terms), alpha_, window_A_);
  }
  std::vector<double> values = values_;
  for (double& v : values) v *= c;
  return table(std::move(values), rule_, alpha_, window_A_);
}

Observable Observable::plus(const Observable& other) const {
  if (kind_ != Kind::closed_form || other.kind_ != Kind::closed_form) {
    throw UsageError("only closed-form observables can be added");
  }
  std::vector<Term> terms = terms_;
  terms.insert(terms.end(), other.terms_.begin(), other.terms_.end());
  return closed_form(std::move(terms), alpha_, window_A_);
}

void Observable::build_range_tables() {
  const std::size_t n = values_.size();
  const auto levels = static_cast<std::size_t>(std::bit_width(n));
  range_min_.assign(levels, {});
  range_max_.assign(levels, {});
  range_min_[0] = values_;
  range_max_[0] = values_;
  for (std::size_t l = 1; l < levels; ++l) {
    const std::size_t span = std::size_t{1} << l;
    const std::size_t count = n - span + 1;
    range_min_[l].resize(count);
    range_max_[l].resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + span / 2;
      range_min_[l][i] = std::min(range_min_[l - 1][i], range_min_[l - 1][j]);
      range_max_[l][i] = std::max(range_max_[l - 1][i], range_max_[l - 1][j]);
    }
  }
  const std::size_t segments = rule_ == TableRule::cell_constant ? n : n - 1;
  const double width = 1.0 / static_cast<double>(segments);
  prefix_.assign(segments + 1, 0.0);
  for (std::size_t i = 0; i < segments; ++i) {
    const double piece = rule_ == TableRule::cell_constant
                             ? values_[i] * width
                             : 0.5 * (values_[i] + values_[i + 1]) * width;
    prefix_[i + 1] = prefix_[i] + piece;
  }
}

std::pair<double, double> Observable::range_query(std::size_t first, std::size_t last) const {
  const std::size_t len = last - first + 1;
  const auto l = static_cast<std::size_t>(std::bit_width(len) - 1);
  const std::size_t j = last + 1 - (std::size_t{1} << l);
  return {std::min(range_min_[l][first], range_min_[l][j]),
          std::max(range_max_[l][first], range_max_[l][j])};
}

double Observable::operator()(double x) const {
  if (kind_ == Kind::closed_form) {
    double s = 0.0;
    for (const Term& t : terms_) s += term_value(t, x);
    return s;
  }
  const std::size_t n = values_.size();
  if (rule_ == TableRule::cell_constant) {
    const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(n);
    const auto i = std::min(static_cast<std::size_t>(pos), n - 1);
    return values_[i];
  }
  const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(n - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), n - 2);
  const double t = pos - static_cast<double>(i);
  return values_[i] + t * (values_[i + 1] - values_[i]);
}

double Observable::limit_right(double x) const {
  if (kind_ == Kind::piecewise_table) return (*this)(x);
  double s = 0.0;
  for (const Term& t : terms_) {
    if (t.kind == Term::Kind::indicator) {
      s += (x >= t.p && x < t.q) ? t.coef : 0.0;
    } else {
      s += term_value(t, x);
    }
  }
  return s;
}

double Observable::limit_left(double x) const {
  if (kind_ == Kind::piecewise_table) {
    if (rule_ == TableRule::cell_constant) {
      const double pos = x * static_cast<double>(values_.size());
      const double r = std::round(pos);
      if (pos == r && r >= 1.0 && r <= static_cast<double>(values_.size())) {
        return values_[static_cast<std::size_t>(r) - 1];
      }
    }
    return (*this)(x);
  }
  double s = 0.0;
  for (const Term& t : terms_) {
    if (t.kind == Term::Kind::indicator) {
      s += (x > t.p && x <= t.q) ? t.coef : 0.0;
    } else {
      s += term_value(t, x);
    }
  }
  return s;
}

double Observable::integral(double lo, double hi) const {
  lo = std::clamp(lo, 0.0, 1.0);
  hi = std::clamp(hi, 0.0, 1.0);
  if (hi <= lo) return 0.0;
  if (kind_ == Kind::closed_form) {
    double s = 0.0;
    for (const Term& t : terms_) s += term_integral(t, lo, hi);
    return s;
  }
  const std::size_t segments = prefix_.size() - 1;
  const auto seg = static_cast<double>(segments);
  // Integral over [0, x].
  const auto cumulative = [&](double x) {
    const double pos = x * seg;
    const auto i = std::min(static_cast<std::size_t>(pos), segments - 1);
    const double t = pos - static_cast<double>(i);
    double partial;
    if (rule_ == TableRule::cell_constant) {
      partial = values_[i] * t / seg;
    } else {
      const double v = values_[i] + 0.5 * t * (values_[i + 1] - values_[i]);
      partial = v * t / seg;
    }
    return prefix_[i] + partial;
  };
  return cumulative(hi) - cumulative(lo);
}

std::vector<double> Observable::cell_averages(std::size_t n) const {
  if (kind_ == Kind::piecewise_table && rule_ == TableRule::cell_constant &&
      values_.size() == n) {
    return values_;
  }
  std::vector<double> out(n);
  const auto nd = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = nd * integral(static_cast<double>(i) / nd, static_cast<double>(i + 1) / nd);
  }
  return out;
}

std::vector<double> Observable::breakpoints() const {
  std::vector<double> out;
  if (kind_ == Kind::closed_form) {
    for (const Term& t : terms_) {
      if (t.kind != Term::Kind::indicator) continue;
      for (double b : {t.p, t.q}) {
        if (b > 0.0 && b < 1.0) out.push_back(b);
      }
    }
  } else if (rule_ == TableRule::cell_constant) {
    const auto n = values_.size();
    for (std::size_t i = 1; i < n; ++i) {
      out.push_back(static_cast<double>(i) / static_cast<double>(n));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::pair<double, double> Observable::extrema(double lo, double hi, std::size_t probe_count) const {
  if (kind_ == Kind::piecewise_table) return table_extrema(lo, hi);
  return closed_extrema(lo, hi, probe_count);
}

std::pair<double, double> Observable::table_extrema(double lo, double hi) const {
  const std::size_t n = values_.size();
  if (rule_ == TableRule::cell_constant) {
    const auto nd = static_cast<double>(n);
    std::size_t first = lo <= 0.0 ? 0 : std::min(static_cast<std::size_t>(lo * nd), n - 1);
    std::size_t last;
    if (hi >= 1.0) {
      last = n - 1;
    } else {
      const double c = std::ceil(hi * nd);
      last = c < 1.0 ? 0 : std::min(static_cast<std::size_t>(c) - 1, n - 1);
    }
    if (last < first) last = first;
    return range_query(first, last);
  }
  const double l = std::max(lo, 0.0);
  const double h = std::min(hi, 1.0);
  double vmin = std::min((*this)(l), (*this)(h));
  double vmax = std::max((*this)(l), (*this)(h));
  const auto step = static_cast<double>(n - 1);
  // Nodes strictly inside (l, h).
  auto first = static_cast<std::size_t>(std::floor(l * step)) + 1;
  const double top = std::ceil(h * step) - 1.0;
  if (top >= 0.0) {
    const auto last = std::min(static_cast<std::size_t>(top), n - 1);
    if (first <= last) {
      const auto [m, M] = range_query(first, last);
      vmin = std::min(vmin, m);
      vmax = std::max(vmax, M);
    }
  }
  return {vmin, vmax};
}

std::pair<double, double> Observable::closed_extrema(double lo, double hi,
                                                     std::size_t probe_count) const {
  const double l = std::max(lo, 0.0);
  const double h = std::min(hi, 1.0);
  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -vmin;
  const auto take = [&](double v) {
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  };
  take(lo < 0.0 ? (*this)(0.0) : limit_right(l));
  take(hi > 1.0 ? (*this)(1.0) : limit_left(h));

  bool has_jumps = false;
  bool smooth_single = terms_.size() <= 1;
  for (const Term& t : terms_) {
    if (t.kind == Term::Kind::indicator) {
      has_jumps = true;
      for (double b : {t.p, t.q}) {
        if (b > l && b < h) {
          take((*this)(b));
          take(limit_left(b));
          take(limit_right(b));
        }
      }
    }
  }
  std::vector<double> critical;
  for (const Term& t : terms_) term_critical_points(t, critical);
  for (double c : critical) {
    if (c > l && c < h) take((*this)(c));
  }
  // Terms that are monotone between their critical points are handled exactly
  // by the candidates above; sums need probing.
  if (smooth_single) return {vmin, vmax};
  bool only_steps = true;
  for (const Term& t : terms_) {
    if (t.kind != Term::Kind::indicator && t.kind != Term::Kind::constant) only_steps = false;
  }
  if (only_steps) return {vmin, vmax};

  const std::size_t probes = std::max<std::size_t>(probe_count, 3);
  const double width = (h - l) / static_cast<double>(probes + 1);
  std::size_t best_max = 0, best_min = 0;
  double probe_max = -std::numeric_limits<double>::infinity();
  double probe_min = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j <= probes; ++j) {
    const double v = (*this)(l + width * static_cast<double>(j));
    take(v);
    if (v > probe_max) { probe_max = v; best_max = j; }
    if (v < probe_min) { probe_min = v; best_min = j; }
  }
  if (has_jumps) return {vmin, vmax};

  // Golden-section polish of the best probes inside their neighbouring probes.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  const auto polish = [&](std::size_t j, double sign) {
    double a = l + width * static_cast<double>(j - 1);
    double b = l + width * static_cast<double>(j + 1);
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = sign * (*this)(c);
    double fd = sign * (*this)(d);
    for (int it = 0; it < 60 && (b - a) > 1e-13; ++it) {
      if (fc > fd) {
        b = d; d = c; fd = fc;
        c = b - invphi * (b - a);
        fc = sign * (*this)(c);
      } else {
        a = c; c = d; fc = fd;
        d = a + invphi * (b - a);
        fd = sign * (*this)(d);
      }
    }
    take(sign * std::max(fc, fd));
  };
  polish(best_max, 1.0);
  polish(best_min, -1.0);
  return {vmin, vmax};
}

std::string Observable::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::piecewise_table) {
    os << "table(" << values_.size()
       << (rule_ == TableRule::cell_constant ? ", cell_constant)" : ", linear)");
    return os.str();
  }
  bool first = true;
  for (const Term& t : terms_) {
    if (!first) os << " + ";
    first = false;
    if (t.coef != 1.0) os << t.coef << "*";
    switch (t.kind) {
      case Term::Kind::constant: os << "1"; break;
      case Term::Kind::linear: os << "x"; break;
      case Term::Kind::cosine: os << "cos(2pi*" << t.k << "x)"; break;
      case Term::Kind::sine: os << "sin(2pi*" << t.k << "x)"; break;
      case Term::Kind::indicator: os << "1[" << t.p << "," << t.q << "]"; break;
      case Term::Kind::holder_bump: os << "|x-" << t.p << "|^" << t.q; break;
    }
  }
  if (first) os << "0";
  return os.str();
}

double osc(const Observable& obs, double delta, double x, std::size_t probe_count) {
  if (!(delta > 0.0)) throw DomainError("osc needs a positive radius");
  const auto [lo, hi] = obs.extrema(x - delta, x + delta, probe_count);
  return hi - lo;
}

std::vector<double> delta_ladder(double window_A) {
  std::vector<double> ladder;
  for (int j = 0;; ++j) {
    const double d = kLadderFloor * std::pow(kLadderRatio, j);
    if (d > window_A * (1.0 + 1e-12)) break;
    ladder.push_back(d);
  }
  if (ladder.empty()) ladder.push_back(window_A);
  std::reverse(ladder.begin(), ladder.end());
  return ladder;
}

double integrated_osc(const Observable& obs, double delta, std::size_t grid_count,
                      std::size_t probe_count) {
  if (grid_count < 64) throw DomainError("seminorm quadrature needs grid_count >= 64");
  std::vector<double> nodes;
  const auto bps = obs.breakpoints();
  nodes.reserve(grid_count + 3 + 2 * bps.size());
  for (std::size_t i = 0; i <= grid_count; ++i) {
    nodes.push_back(static_cast<double>(i) / static_cast<double>(grid_count));
  }
  nodes.push_back(delta);
  nodes.push_back(1.0 - delta);
  for (double b : bps) {
    nodes.push_back(b - delta);
    nodes.push_back(b + delta);
  }
  for (double& t : nodes) t = std::clamp(t, 0.0, 1.0);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  // Midpoint rule on the pieces; osc is piecewise linear in x for linear or
  // stepped observables once these nodes are included.
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double w = nodes[i + 1] - nodes[i];
    if (w <= 0.0) continue;
    total += w * osc(obs, delta, 0.5 * (nodes[i] + nodes[i + 1]), probe_count);
  }
  return total;
}

SeminormEstimate seminorm_estimate(const Observable& obs, std::size_t grid_count,
                                   std::size_t probe_count) {
  SeminormEstimate best;
  for (double delta : delta_ladder(obs.window_A())) {
    const double v = integrated_osc(obs, delta, grid_count, probe_count) / std::pow(delta, obs.alpha());
    if (v > best.value) {
      best.value = v;
      best.argmax_delta = delta;
    }
  }
  return best;
}

double seminorm_alpha(const Observable& obs, std::size_t grid_count) {
  return seminorm_estimate(obs, grid_count).value;
}

double l1_norm(const Observable& obs) {
  if (obs.kind() == Observable::Kind::piecewise_table) {
    const auto& v = obs.values();
    double s = 0.0;
    if (obs.rule() == Observable::TableRule::cell_constant) {
      for (double x : v) s += std::abs(x);
      return s / static_cast<double>(v.size());
    }
    const double w = 1.0 / static_cast<double>(v.size() - 1);
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      const double a = v[i], b = v[i + 1];
      if ((a >= 0.0) == (b >= 0.0)) {
        s += 0.5 * std::abs(a + b) * w;
      } else {
        s += 0.5 * (a * a + b * b) / (std::abs(a) + std::abs(b)) * w;
      }
    }
    return s;
  }
  // Composite 4-point Gauss-Legendre; panels containing a sign change are split
  // at the root.
  static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                                   0.3399810435848563, 0.8611363115940526};
  static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461,
                                   0.6521451548625461, 0.3478548451374538};
  const auto gauss_abs = [&](double a, double b) {
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += gw[i] * std::abs(obs(c + r * gx[i]));
    return s * r;
  };
  std::vector<double> cuts = obs.breakpoints();
  const std::size_t panels = 4096;
  for (std::size_t i = 0; i <= panels; ++i) cuts.push_back(static_cast<double>(i) / panels);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    const double fa = obs.limit_right(a), fb = obs.limit_left(b);
    if (fa * fb < 0.0) {
      double l = a, h = b;
      for (int it = 0; it < 80 && h - l > 1e-16; ++it) {
        const double m = 0.5 * (l + h);
        if ((obs(m) < 0.0) == (fa < 0.0)) l = m; else h = m;
      }
      const double root = 0.5 * (l + h);
      total += gauss_abs(a, root) + gauss_abs(root, b);
    } else {
      total += gauss_abs(a, b);
    }
  }
  return total;
}

double norm_alpha(const Observable& obs, std::size_t grid_count) {
  return seminorm_alpha(obs, grid_count) + l1_norm(obs);
}

}  // namespace pemlab
