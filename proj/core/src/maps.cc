#include "pemlab/maps.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pemlab/error.h"

namespace pemlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNearOne = 1e-15;
constexpr double kWindowSlack = 1e-12;

double wrap_unit(double y) {
  if (y >= 1.0 - kNearOne) return 0.0;
  return y < 0.0 ? 0.0 : y;
}

std::string describe(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::tent_slope: return "tent_slope";
    case FamilyKind::beta: return "beta";
    case FamilyKind::markov_full_branch: return "markov_full_branch";
    case FamilyKind::constant_doubling: return "constant_doubling";
  }
  return "unknown";
}

std::optional<FamilyKind> parse_family_kind(std::string_view text) {
  if (text == "tent" || text == "tent_slope") return FamilyKind::tent_slope;
  if (text == "beta") return FamilyKind::beta;
  if (text == "markov" || text == "markov_full_branch") return FamilyKind::markov_full_branch;
  if (text == "doubling" || text == "constant_doubling") return FamilyKind::constant_doubling;
  return std::nullopt;
}

std::string_view to_string(X0Spec::Kind kind) {
  switch (kind) {
    case X0Spec::Kind::critical_value: return "critical_value";
    case X0Spec::Kind::identity: return "identity";
    case X0Spec::Kind::affine: return "affine";
    case X0Spec::Kind::constant: return "constant";
  }
  return "unknown";
}

std::optional<X0Spec::Kind> parse_x0_kind(std::string_view text) {
  if (text == "critical_value") return X0Spec::Kind::critical_value;
  if (text == "identity") return X0Spec::Kind::identity;
  if (text == "affine") return X0Spec::Kind::affine;
  if (text == "constant") return X0Spec::Kind::constant;
  return std::nullopt;
}

MapFamily::MapFamily(FamilyKind kind, double base, double window, int p0, X0Spec x0)
    : kind_(kind), base_(base), window_(window), p0_(p0), x0_(x0) {
  validate();
}

MapFamily MapFamily::tent(double s0, std::optional<double> window, X0Spec x0) {
  const double w = window.value_or(std::max(0.0, std::min(0.1, 2.0 - s0)));
  return MapFamily(FamilyKind::tent_slope, s0, w, 2, x0);
}

MapFamily MapFamily::beta(double beta0, double window, X0Spec x0) {
  if (!(beta0 > 1.0) || !std::isfinite(beta0)) {
    throw DomainError("beta family needs beta0 > 1, got " + describe(beta0));
  }
  return MapFamily(FamilyKind::beta, beta0, window, static_cast<int>(std::ceil(beta0)), x0);
}

MapFamily MapFamily::markov(double amplitude, double window, X0Spec x0) {
  return MapFamily(FamilyKind::markov_full_branch, amplitude, window, 2, x0);
}

MapFamily MapFamily::doubling(double window, X0Spec x0) {
  return MapFamily(FamilyKind::constant_doubling, 0.0, window, 2, x0);
}

MapFamily MapFamily::make(FamilyKind kind, double base, std::optional<double> window,
                          std::optional<X0Spec> x0) {
  switch (kind) {
    case FamilyKind::tent_slope:
      return tent(base, window, x0.value_or(X0Spec::critical_value()));
    case FamilyKind::beta:
      return beta(base, window.value_or(0.05), x0.value_or(X0Spec::affine(0.2, 10.0)));
    case FamilyKind::markov_full_branch:
      return markov(base, window.value_or(0.05), x0.value_or(X0Spec::affine(0.2, 10.0)));
    case FamilyKind::constant_doubling:
      return doubling(window.value_or(1.0), x0.value_or(X0Spec::identity()));
  }
  throw DomainError("unknown family kind");
}

void MapFamily::validate() const {
  if (!(window_ >= 0.0) || !std::isfinite(window_)) {
    throw DomainError("admissible window must be a finite nonnegative width");
  }
  switch (kind_) {
    case FamilyKind::tent_slope:
      if (!(base_ > std::numbers::sqrt2) || base_ + window_ > 2.0 + kWindowSlack) {
        throw DomainError("tent slopes must stay in (sqrt 2, 2]; got [" + describe(base_) + ", " +
                          describe(base_ + window_) + "]");
      }
      break;
    case FamilyKind::beta:
      if (std::ceil(base_ + window_) != std::ceil(base_)) {
        throw DomainError("beta window [" + describe(base_) + ", " + describe(base_ + window_) +
                          "] changes the number of branches");
      }
      break;
    case FamilyKind::markov_full_branch:
      if (!(base_ >= 0.0) || kTwoPi * base_ * window_ > 0.7 + kWindowSlack) {
        throw DomainError("markov perturbation too large: expansion would drop below 1.3");
      }
      break;
    case FamilyKind::constant_doubling:
      break;
  }
  if (x0_.kind == X0Spec::Kind::critical_value && kind_ != FamilyKind::tent_slope) {
    throw DomainError("critical_value seed needs a family with a turning point");
  }
  for (double a : {0.0, window_}) {
    const double x = x0(a);
    if (!(x >= 0.0 && x <= 1.0)) {
      throw DomainError("seed x_0(" + describe(a) + ") = " + describe(x) + " leaves [0,1]");
    }
  }
}

double MapFamily::lambda_min() const {
  switch (kind_) {
    case FamilyKind::tent_slope:
    case FamilyKind::beta: return base_;
    case FamilyKind::markov_full_branch: return 2.0 - kTwoPi * base_ * window_;
    case FamilyKind::constant_doubling: return 2.0;
  }
  return 0.0;
}

double MapFamily::lambda_max() const {
  switch (kind_) {
    case FamilyKind::tent_slope:
    case FamilyKind::beta: return base_ + window_;
    case FamilyKind::markov_full_branch: return 2.0 + kTwoPi * base_ * window_;
    case FamilyKind::constant_doubling: return 2.0;
  }
  return 0.0;
}

bool MapFamily::admissible(double a) const {
  return a >= -kWindowSlack && a <= window_ + kWindowSlack;
}

void MapFamily::require_admissible(double a) const {
  if (!admissible(a)) {
    throw DomainError("parameter " + describe(a) + " outside admissible window [0, " +
                      describe(window_) + "] of " + std::string(to_string(kind_)));
  }
}

namespace {

void require_unit(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("point " + describe(x) + " outside [0,1]");
}

}  // namespace

double MapFamily::step(double a, double x) const {
  switch (kind_) {
    case FamilyKind::tent_slope:
      return (base_ + a) * std::min(x, 1.0 - x);
    case FamilyKind::constant_doubling: {
      double y = 2.0 * x;
      if (y >= 1.0) y -= 1.0;
      return wrap_unit(y);
    }
    case FamilyKind::beta: {
      const int k = branch_of(a, x);
      return wrap_unit(branch_eval(a, k, x));
    }
    case FamilyKind::markov_full_branch: {
      const double y = (x < 0.5 ? 2.0 * x : 2.0 * x - 1.0) + base_ * a * std::sin(kTwoPi * x);
      return std::clamp(y, 0.0, 1.0);
    }
  }
  return 0.0;
}

double MapFamily::eval(double a, double x) const {
  require_admissible(a);
  require_unit(x);
  return step(a, x);
}

double MapFamily::deriv_x(double a, double x) const {
  require_admissible(a);
  require_unit(x);
  if (near_branch_point(a, x)) {
    throw BranchBoundaryError("x = " + describe(x) + " is on a branch point");
  }
  return branch_deriv_x(a, branch_of(a, x), x);
}

double MapFamily::deriv_a(double a, double x) const {
  require_admissible(a);
  require_unit(x);
  if (near_branch_point(a, x)) {
    throw BranchBoundaryError("x = " + describe(x) + " is on a branch point");
  }
  return branch_deriv_a(a, branch_of(a, x), x);
}

std::vector<double> MapFamily::branch_points(double a) const {
  std::vector<double> b(static_cast<std::size_t>(p0_) + 1);
  b.front() = 0.0;
  b.back() = 1.0;
  if (kind_ == FamilyKind::beta) {
    const double beta = parameter_value(a);
    for (int k = 1; k < p0_; ++k) b[static_cast<std::size_t>(k)] = k / beta;
  } else {
    b[1] = 0.5;
  }
  return b;
}

int MapFamily::branch_of(double a, double x) const {
  if (kind_ != FamilyKind::beta) return x < 0.5 ? 1 : 2;
  const double beta = parameter_value(a);
  int k = static_cast<int>(std::floor(beta * x)) + 1;
  k = std::clamp(k, 1, p0_);
  if (k < p0_ && x >= k / beta) ++k;
  if (k > 1 && x < (k - 1) / beta) --k;
  return k;
}

bool MapFamily::near_branch_point(double a, double x) const {
  if (kind_ != FamilyKind::beta) return std::abs(x - 0.5) <= kBranchTolerance;
  const double beta = parameter_value(a);
  for (int k = 1; k < p0_; ++k) {
    if (std::abs(x - k / beta) <= kBranchTolerance) return true;
  }
  return false;
}

double MapFamily::branch_eval(double a, int k, double x) const {
  switch (kind_) {
    case FamilyKind::tent_slope:
      return (base_ + a) * (k == 1 ? x : 1.0 - x);
    case FamilyKind::beta:
      return parameter_value(a) * x - (k - 1);
    case FamilyKind::markov_full_branch:
      return 2.0 * x - (k - 1) + base_ * a * std::sin(kTwoPi * x);
    case FamilyKind::constant_doubling:
      return 2.0 * x - (k - 1);
  }
  return 0.0;
}

double MapFamily::branch_deriv_x(double a, int k, double x) const {
  switch (kind_) {
    case FamilyKind::tent_slope:
      return k == 1 ? base_ + a : -(base_ + a);
    case FamilyKind::beta:
      return parameter_value(a);
    case FamilyKind::markov_full_branch:
      return 2.0 + kTwoPi * base_ * a * std::cos(kTwoPi * x);
    case FamilyKind::constant_doubling:
      return 2.0;
  }
  return 0.0;
}

double MapFamily::branch_deriv_a(double /*a*/, int k, double x) const {
  switch (kind_) {
    case FamilyKind::tent_slope:
      return k == 1 ? x : 1.0 - x;
    case FamilyKind::beta:
      return x;
    case FamilyKind::markov_full_branch:
      return base_ * std::sin(kTwoPi * x);
    case FamilyKind::constant_doubling:
      return 0.0;
  }
  return 0.0;
}

bool MapFamily::branch_increasing(int k) const {
  return !(kind_ == FamilyKind::tent_slope && k == 2);
}

std::pair<double, double> MapFamily::branch_image(double a, int k) const {
  switch (kind_) {
    case FamilyKind::tent_slope:
      return {0.0, 0.5 * (base_ + a)};
    case FamilyKind::beta:
      if (k == p0_) return {0.0, parameter_value(a) - (p0_ - 1)};
      return {0.0, 1.0};
    default:
      return {0.0, 1.0};
  }
}

double MapFamily::branch_inverse(double a, int k, double y) const {
  const auto [lo, hi] = branch_image(a, k);
  y = std::clamp(y, lo, hi);
  switch (kind_) {
    case FamilyKind::tent_slope: {
      const double s = base_ + a;
      return k == 1 ? y / s : 1.0 - y / s;
    }
    case FamilyKind::beta:
      return (y + (k - 1)) / parameter_value(a);
    case FamilyKind::constant_doubling:
      return 0.5 * (y + (k - 1));
    case FamilyKind::markov_full_branch: {
      // Safeguarded Newton on a strictly increasing branch.
      double left = 0.5 * (k - 1);
      double right = left + 0.5;
      double x = 0.5 * (y + (k - 1));
      for (int it = 0; it < 60; ++it) {
        const double f = branch_eval(a, k, x) - y;
        if (f == 0.0) return x;
        if (f > 0.0) right = x; else left = x;
        double next = x - f / branch_deriv_x(a, k, x);
        if (!(next > left && next < right)) next = 0.5 * (left + right);
        if (std::abs(next - x) <= 1e-17) return next;
        x = next;
      }
      return x;
    }
  }
  return 0.0;
}

double MapFamily::x0(double a) const {
  switch (x0_.kind) {
    case X0Spec::Kind::critical_value: return branch_eval(a, 1, 0.5);
    case X0Spec::Kind::identity: return a;
    case X0Spec::Kind::affine: return x0_.anchor + x0_.slope * a;
    case X0Spec::Kind::constant: return x0_.anchor;
  }
  return 0.0;
}

double MapFamily::x0_deriv(double a) const {
  switch (x0_.kind) {
    case X0Spec::Kind::critical_value: return branch_deriv_a(a, 1, 0.5);
    case X0Spec::Kind::identity: return 1.0;
    case X0Spec::Kind::affine: return x0_.slope;
    case X0Spec::Kind::constant: return 0.0;
  }
  return 0.0;
}

OrbitRecord MapFamily::orbit(double a, std::size_t n) const {
  require_admissible(a);
  OrbitRecord rec;
  rec.a = a;
  rec.points.reserve(n + 1);
  rec.itinerary.reserve(n);
  rec.x_derivative.reserve(n + 1);
  rec.a_derivative.reserve(n + 1);

  double x = x0(a);
  double dx_da = x0_deriv(a);
  double phase = 1.0;
  rec.points.push_back(x);
  rec.x_derivative.push_back(phase);
  rec.a_derivative.push_back(dx_da);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = branch_of(a, x);
    if (near_branch_point(a, x)) rec.boundary_hits.push_back(i);
    rec.itinerary.push_back(static_cast<std::uint8_t>(k));
    const double tx = branch_deriv_x(a, k, x);
    dx_da = tx * dx_da + branch_deriv_a(a, k, x);
    phase *= tx;
    x = step(a, x);
    rec.points.push_back(x);
    rec.x_derivative.push_back(phase);
    rec.a_derivative.push_back(dx_da);
  }
  return rec;
}

std::pair<double, double> MapFamily::orbit_along(double a,
                                                 const std::vector<std::uint8_t>& itinerary) const {
  double x = x0(a);
  double d = x0_deriv(a);
  for (std::uint8_t k : itinerary) {
    d = branch_deriv_x(a, k, x) * d + branch_deriv_a(a, k, x);
    x = branch_eval(a, k, x);
  }
  return {x, d};
}

DyadicOrbit::DyadicOrbit(double x0, std::uint64_t seed, std::uint64_t stream)
    : tail_(seed, stream) {
  double x = x0 - std::floor(x0);
  if (x >= 1.0) x = 0.0;
  const auto top = static_cast<std::uint64_t>(std::ldexp(x, 64));
  hi_ = (top & ~std::uint64_t{0x7FF}) | (tail_.next_u64() >> 53);
  lo_ = tail_.next_u64();
}

DyadicOrbit DyadicOrbit::from_word(std::uint64_t top_word, std::uint64_t seed,
                                   std::uint64_t stream) {
  DyadicOrbit orbit(seed, stream);
  orbit.hi_ = top_word;
  orbit.lo_ = orbit.tail_.next_u64();
  return orbit;
}

void DyadicOrbit::refill() {
  lo_ = tail_.next_u64();
  used_ = 0;
}

}  // namespace pemlab
