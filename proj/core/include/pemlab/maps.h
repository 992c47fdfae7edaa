#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pemlab/random.h"

namespace pemlab {

enum class FamilyKind { tent_slope, beta, markov_full_branch, constant_doubling };

std::string_view to_string(FamilyKind kind);
// Accepts the enum names and the short forms tent, beta, markov, doubling.
std::optional<FamilyKind> parse_family_kind(std::string_view text);

// How the point of interest x_0(a) depends on the parameter.
struct X0Spec {
  enum class Kind {
    critical_value,  // image of the turning point, x_0(a) = T_a(c)
    identity,        // x_0(a) = a
    affine,          // x_0(a) = anchor + slope * a
    constant,        // x_0(a) = anchor; has zero parameter derivative
  };
  Kind kind = Kind::identity;
  double anchor = 0.2;
  double slope = 10.0;

  static X0Spec critical_value() { return {Kind::critical_value, 0.0, 0.0}; }
  static X0Spec identity() { return {Kind::identity, 0.0, 1.0}; }
  static X0Spec affine(double anchor, double slope) { return {Kind::affine, anchor, slope}; }
  static X0Spec constant(double value) { return {Kind::constant, value, 0.0}; }
};

std::string_view to_string(X0Spec::Kind kind);
std::optional<X0Spec::Kind> parse_x0_kind(std::string_view text);

struct OrbitRecord {
  double a = 0.0;
  std::vector<double> points;          // x_0 .. x_n
  std::vector<std::uint8_t> itinerary; // branch (1-based) of x_0 .. x_{n-1}
  std::vector<double> x_derivative;    // (T_a^j)'(x_0), j = 0 .. n
  std::vector<double> a_derivative;    // x_j'(a), j = 0 .. n
  std::vector<std::size_t> boundary_hits;  // indices i < n with x_i on a branch point

  bool hit_boundary() const { return !boundary_hits.empty(); }
};

// Points closer than this to an interior branch point count as on it.
inline constexpr double kBranchTolerance = 1e-14;

// A one-parameter family T_a, a in [0, window], of piecewise expanding maps of
// [0,1] with p0 monotone branches. Branches are numbered 1..p0 from the left.
// Immutable after construction.
class MapFamily {
 public:
  // s0 in (sqrt 2, 2]; the slope is s0 + a.
  static MapFamily tent(double s0, std::optional<double> window = std::nullopt,
                        X0Spec x0 = X0Spec::critical_value());
  static MapFamily beta(double beta0, double window = 0.05,
                        X0Spec x0 = X0Spec::affine(0.2, 10.0));
  static MapFamily markov(double amplitude = 0.1, double window = 0.05,
                          X0Spec x0 = X0Spec::affine(0.2, 10.0));
  static MapFamily doubling(double window = 1.0, X0Spec x0 = X0Spec::identity());

  // Dispatches on kind; `base` is s0, beta0 or the amplitude (ignored for doubling).
  static MapFamily make(FamilyKind kind, double base, std::optional<double> window,
                        std::optional<X0Spec> x0);

  FamilyKind kind() const { return kind_; }
  double base() const { return base_; }
  double window() const { return window_; }
  double alpha() const { return 1.0; }
  int p0() const { return p0_; }
  const X0Spec& x0_spec() const { return x0_; }
  double lambda_min() const;
  double lambda_max() const;
  bool constant_in_a() const { return kind_ == FamilyKind::constant_doubling; }
  bool has_exact_dyadic_orbits() const { return kind_ == FamilyKind::constant_doubling; }

  bool admissible(double a) const;
  // Throws DomainError unless admissible(a).
  void require_admissible(double a) const;

  // T_a(x) with the right-limit convention at branch points.
  double eval(double a, double x) const;
  double deriv_x(double a, double x) const;
  double deriv_a(double a, double x) const;

  std::vector<double> branch_points(double a) const;
  // Branch containing x under the right-limit convention; x = 1 belongs to p0.
  int branch_of(double a, double x) const;
  // Distance-based test against the interior branch points b_1 .. b_{p0-1}.
  bool near_branch_point(double a, double x) const;

  // The smooth formula of branch k, continued to the closed branch interval.
  double branch_eval(double a, int k, double x) const;
  double branch_deriv_x(double a, int k, double x) const;
  double branch_deriv_a(double a, int k, double x) const;
  bool branch_increasing(int k) const;
  // Image of the closed branch interval, as [lo, hi].
  std::pair<double, double> branch_image(double a, int k) const;
  // The x in branch k with branch_eval(a, k, x) = y, y clamped to the image.
  double branch_inverse(double a, int k, double y) const;

  double x0(double a) const;
  double x0_deriv(double a) const;

  OrbitRecord orbit(double a, std::size_t n) const;
  // Orbit forced along a fixed itinerary using the continued branch formulas.
  // Returns {x_n, x_n'(a)}.
  std::pair<double, double> orbit_along(double a, const std::vector<std::uint8_t>& itinerary) const;

  // Unchecked fast step for tight loops: no admissibility check.
  double step(double a, double x) const;

 private:
  MapFamily(FamilyKind kind, double base, double window, int p0, X0Spec x0);
  void validate() const;
  double parameter_value(double a) const { return base_ + a; }

  FamilyKind kind_;
  double base_;
  double window_;
  int p0_;
  X0Spec x0_;
};

// Exact orbit of the doubling map read off a binary expansion: x_i is the
// fraction whose bits are bits i+1, i+2, ... of x_0. The leading 53 bits are
// those of the starting double; later bits come from a seeded stream, so x_0 is
// a uniform point of the 2^-53 dyadic cell around the double.
class DyadicOrbit {
 public:
  DyadicOrbit(double x0, std::uint64_t seed, std::uint64_t stream);
  // Starts from an explicit leading word; all later bits come from the stream.
  static DyadicOrbit from_word(std::uint64_t top_word, std::uint64_t seed, std::uint64_t stream);

  // Leading 64 bits of the current point x_i.
  std::uint64_t word() const { return hi_; }
  double point() const { return static_cast<double>(hi_ >> 11) * 0x1.0p-53; }
  std::size_t index() const { return index_; }

  void advance() {
    hi_ = (hi_ << 1) | (lo_ >> 63);
    lo_ <<= 1;
    if (++used_ == 64) refill();
    ++index_;
  }

 private:
  DyadicOrbit(std::uint64_t seed, std::uint64_t stream) : tail_(seed, stream) {}
  void refill();

  StreamRng tail_;
  std::uint64_t hi_ = 0;
  std::uint64_t lo_ = 0;
  int used_ = 0;
  std::size_t index_ = 0;
};

}  // namespace pemlab
