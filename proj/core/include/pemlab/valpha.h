#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pemlab {

// One summand of a closed-form observable.
struct Term {
  enum class Kind {
    constant,     // coef
    linear,       // coef * x
    cosine,       // coef * cos(2 pi k x)
    sine,         // coef * sin(2 pi k x)
    indicator,    // coef * 1[p <= x <= q]
    holder_bump,  // coef * |x - p|^q
  };
  Kind kind = Kind::constant;
  double coef = 1.0;
  int k = 1;
  double p = 0.0;
  double q = 0.0;

  static Term constant(double c) { return {Kind::constant, c, 0, 0.0, 0.0}; }
  static Term linear(double c) { return {Kind::linear, c, 0, 0.0, 0.0}; }
  static Term cosine(int k, double c = 1.0) { return {Kind::cosine, c, k, 0.0, 0.0}; }
  static Term sine(int k, double c = 1.0) { return {Kind::sine, c, k, 0.0, 0.0}; }
  static Term indicator(double p, double q, double c = 1.0) {
    return {Kind::indicator, c, 0, p, q};
  }
  static Term holder_bump(double center, double exponent, double c = 1.0) {
    return {Kind::holder_bump, c, 0, center, exponent};
  }
};

// A bounded real function on [0,1] together with the constants (alpha, A)
// of the generalised bounded variation norm it is measured in.
class Observable {
 public:
  enum class Kind { closed_form, piecewise_table };
  enum class TableRule {
    cell_constant,  // value i on [i/N, (i+1)/N); the last cell is closed
    linear,         // node i at i/(N-1), linear in between
  };

  static Observable closed_form(std::vector<Term> terms, double alpha = 1.0, double window_A = 0.25);
  static Observable table(std::vector<double> values, TableRule rule, double alpha = 1.0,
                          double window_A = 0.25);

  // cos 2 pi x + cos 4 pi x
  static Observable erdos_fortet();
  static Observable cos1();
  static Observable indicator(double p, double q);
  static Observable constant(double c);
  static Observable identity();

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double window_A() const { return window_A_; }
  const std::vector<Term>& terms() const { return terms_; }
  const std::vector<double>& values() const { return values_; }
  TableRule rule() const { return rule_; }

  Observable with_constants(double alpha, double window_A) const;
  Observable scaled(double c) const;
  // Sum of two observables; both must be closed-form.
  Observable plus(const Observable& other) const;

  double operator()(double x) const;
  double limit_left(double x) const;
  double limit_right(double x) const;

  // Exact integral over [lo, hi] within [0,1].
  double integral(double lo, double hi) const;
  // Averages over the N equal cells of [0,1].
  std::vector<double> cell_averages(std::size_t n) const;

  // Points in (0,1) where the function may jump.
  std::vector<double> breakpoints() const;
  // {inf, sup} over the open window (lo, hi) intersected with [0,1].
  std::pair<double, double> extrema(double lo, double hi, std::size_t probe_count = 257) const;

  std::string describe() const;

 private:
  Observable() = default;
  void build_range_tables();
  std::pair<double, double> table_extrema(double lo, double hi) const;
  std::pair<double, double> closed_extrema(double lo, double hi, std::size_t probe_count) const;
  std::pair<double, double> range_query(std::size_t first, std::size_t last) const;

  Kind kind_ = Kind::closed_form;
  std::vector<Term> terms_;
  std::vector<double> values_;
  TableRule rule_ = TableRule::cell_constant;
  double alpha_ = 1.0;
  double window_A_ = 0.25;

  // Sparse tables for O(1) range min/max over table values.
  std::vector<std::vector<double>> range_min_;
  std::vector<std::vector<double>> range_max_;
  std::vector<double> prefix_;  // prefix integrals of table cells
};

inline constexpr std::size_t kDefaultProbeCount = 257;

// sup - inf of obs over (x - delta, x + delta) intersected with [0,1].
double osc(const Observable& obs, double delta, double x, std::size_t probe_count = kDefaultProbeCount);

// The nested geometric ladder of radii used for the supremum over delta.
std::vector<double> delta_ladder(double window_A);

// Integral over x of osc(obs, delta, x).
double integrated_osc(const Observable& obs, double delta, std::size_t grid_count = 1024,
                      std::size_t probe_count = kDefaultProbeCount);

struct SeminormEstimate {
  double value = 0.0;
  double argmax_delta = 0.0;
};

SeminormEstimate seminorm_estimate(const Observable& obs, std::size_t grid_count = 1024,
                                   std::size_t probe_count = kDefaultProbeCount);
double seminorm_alpha(const Observable& obs, std::size_t grid_count = 1024);
double l1_norm(const Observable& obs);
double norm_alpha(const Observable& obs, std::size_t grid_count = 1024);

}  // namespace pemlab
