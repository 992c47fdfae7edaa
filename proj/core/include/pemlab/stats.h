#pragma once

#include <span>
#include <vector>

namespace pemlab::stats {

double normal_cdf(double x);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;         // unbiased
  double excess_kurtosis = 0.0;  // m4 / m2^2 - 3, plug-in estimator
};

Moments moments(std::span<const double> xs);

// Two-sided Kolmogorov-Smirnov distance between the empirical CDF of xs and
// the N(0, sd^2) distribution.
double ks_distance_normal(std::span<const double> xs, double sd = 1.0);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double centered_r_squared = 0.0;  // 1 - SS_res / sum (y - mean y)^2
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

// y = c * x with no intercept. r_squared is the uncentered 1 - SS_res / sum y^2
// used for models without a constant term; the centered value is kept too.
LinearFit least_squares_through_origin(std::span<const double> x, std::span<const double> y);

}  // namespace pemlab::stats
