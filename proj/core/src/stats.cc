#include "pemlab/stats.h"

#include <algorithm>
#include <cmath>

#include "pemlab/error.h"

namespace pemlab::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Moments moments(std::span<const double> xs) {
  Moments m;
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  if (xs.size() > 1) m.variance = m2 / (n - 1.0);
  m2 /= n;
  m4 /= n;
  m.excess_kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  return m;
}

double ks_distance_normal(std::span<const double> xs, double sd) {
  if (xs.empty()) return 1.0;
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf(sorted[i] / sd);
    const auto di = static_cast<double>(i);
    d = std::max({d, (di + 1.0) / n - f, f - di / n});
  }
  return d;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InsufficientDataError("least_squares needs at least two paired points");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.centered_r_squared = fit.r_squared;
  return fit;
}

LinearFit least_squares_through_origin(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw InsufficientDataError("least_squares_through_origin needs paired points");
  }
  double sxx = 0.0, sxy = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    my += y[i];
  }
  my /= static_cast<double>(y.size());
  LinearFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  double ss_res = 0.0, ss_tot = 0.0, ss_raw = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.slope * x[i];
    ss_res += r * r;
    ss_tot += (y[i] - my) * (y[i] - my);
    ss_raw += y[i] * y[i];
  }
  fit.r_squared = ss_raw > 0.0 ? 1.0 - ss_res / ss_raw : 1.0;
  fit.centered_r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

}  // namespace pemlab::stats
