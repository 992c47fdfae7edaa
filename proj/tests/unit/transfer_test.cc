#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pemlab/error.h"
#include "pemlab/transfer.h"

using namespace pemlab;

namespace {

const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

// Dense copy of the Ulam matrix.
std::vector<std::vector<double>> dense(const UlamSystem& s) {
  const std::size_t n = s.grid_count();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = s.row_start()[i]; k < s.row_start()[i + 1]; ++k) {
      m[i][s.columns()[k]] += s.weights()[k];
    }
  }
  return m;
}

double parry_density(double x) {
  // Golden beta: the orbit of 1 is 1, 1/beta, 0.
  const double raw = 1.0 + (x < 1.0 / kGolden ? 1.0 / kGolden : 0.0);
  return raw / (1.0 + 1.0 / (kGolden * kGolden));
}

SolverOptions grid(std::size_t n) {
  SolverOptions o;
  o.grid_count = n;
  return o;
}

}  // namespace

TEST(BuildUlam, DoublingRows) {
  const auto m = dense(build_ulam(MapFamily::doubling(), 0.0, 4));
  const std::vector<std::vector<double>> expected{
      {0.5, 0.5, 0, 0}, {0, 0, 0.5, 0.5}, {0.5, 0.5, 0, 0}, {0, 0, 0.5, 0.5}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(m[i][j], expected[i][j], 1e-15);
}

TEST(BuildUlam, FullTentTwoCells) {
  const auto m = dense(build_ulam(MapFamily::tent(2.0), 0.0, 2));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(m[i][j], 0.5, 1e-15);
}

TEST(BuildUlam, RowStochastic) {
  for (const auto& f : {MapFamily::beta(kGolden), MapFamily::tent(1.85), MapFamily::markov()}) {
    const auto s = build_ulam(f, 0.5 * f.window(), 8);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(s.row_sum(i), 1.0, 1e-12);
  }
}

TEST(BuildUlam, PowersStayStochastic) {
  for (const auto& f : {MapFamily::beta(kGolden), MapFamily::tent(1.9), MapFamily::markov()}) {
    const auto s = build_ulam(f, 0.3 * f.window(), 512);
    std::vector<double> ones(512, 1.0), next(512);
    for (int k = 0; k < 20; ++k) {
      s.pull_back(ones, next);
      ones.swap(next);
      for (double v : ones) ASSERT_NEAR(v, 1.0, 1e-10);
    }
  }
}

TEST(BuildUlam, Duality) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto s = build_ulam(MapFamily::tent(1.9), 0.02, 256);
  std::vector<double> m(256), psi(256), back(256);
  for (std::size_t i = 0; i < 256; ++i) {
    m[i] = u(rng);
    psi[i] = u(rng);
  }
  const auto pushed = s.push_forward(m);
  s.pull_back(psi, back);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    lhs += pushed[i] * psi[i];
    rhs += m[i] * back[i];
  }
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(InvariantDensity, UniformCases) {
  for (const auto& f : {MapFamily::doubling(), MapFamily::tent(2.0)}) {
    for (std::size_t n : {16u, 1000u}) {
      const auto s = solved_system(f, 0.0, grid(n));
      for (double h : s.density()) EXPECT_NEAR(h, 1.0, 1e-10);
    }
  }
}

TEST(InvariantDensity, ParryGoldenBeta) {
  const auto s = solved_system(MapFamily::beta(kGolden), 0.0, grid(8192));
  double l1 = 0.0;
  for (std::size_t i = 0; i < 8192; ++i) {
    // Exact cell average of the two-level closed form.
    const double lo = i / 8192.0, hi = (i + 1) / 8192.0, b = 1.0 / kGolden;
    double avg;
    if (hi <= b) avg = parry_density(lo);
    else if (lo >= b) avg = parry_density(hi);
    else avg = ((b - lo) * parry_density(lo) + (hi - b) * parry_density(hi)) * 8192.0;
    l1 += std::abs(s.density()[i] - avg) / 8192.0;
  }
  EXPECT_LE(l1, 5e-3);
}

TEST(InvariantDensity, NotSolvedIsStateError) {
  const auto s = build_ulam(MapFamily::doubling(), 0.0, 8);
  EXPECT_THROW(s.density(), StateError);
  EXPECT_THROW(correlation(s, Observable::cos1(), Observable::cos1(), 1), StateError);
}

TEST(InvariantDensity, IterationCapRaisesConvergenceError) {
  auto s = build_ulam(MapFamily::tent(1.85), 0.0, 512);
  EXPECT_THROW(invariant_density(s, 1e-30, 3), ConvergenceError);
}

TEST(InvariantDensity, GridRefinementConverges) {
  for (const auto& f : {MapFamily::tent(1.9), MapFamily::beta(kGolden), MapFamily::markov()}) {
    const double a = 0.4 * f.window();
    std::vector<double> distances;
    std::vector<double> previous;
    for (std::size_t n = 512; n <= 8192; n *= 2) {
      const auto s = solved_system(f, a, grid(n));
      const auto& h = s.density();
      if (!previous.empty()) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) d += std::abs(h[i] - previous[i / 2]) / n;
        distances.push_back(d);
      }
      previous = h;
    }
    for (std::size_t k = 1; k < distances.size(); ++k) {
      EXPECT_LE(distances[k], distances[k - 1] + 1e-12) << to_string(f.kind()) << " step " << k;
    }
  }
}

TEST(Correlation, DoublingExamples) {
  const auto s = solved_system(MapFamily::doubling(), 0.0, grid(4096));
  EXPECT_NEAR(correlation(s, Observable::cos1(), Observable::cos1(), 1), 0.0, 1e-6);
  const auto ef = Observable::erdos_fortet();
  EXPECT_NEAR(correlation(s, ef, ef, 1), 0.5, 1e-5);
  EXPECT_NEAR(correlation(s, ef, ef, 3), 0.0, 1e-6);
}

TEST(DecayRate, ExactGeometric) {
  std::vector<double> c{0.5};
  for (int k = 1; k <= 10; ++k) c.push_back(0.5 * std::pow(0.25, k));
  const auto fit = decay_rate(c);
  EXPECT_NEAR(fit.rho, 0.25, 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
}

TEST(DecayRate, BelowFloorIsInsufficient) {
  const std::vector<double> c(12, 1e-16);
  EXPECT_THROW(decay_rate(c), InsufficientDataError);
}

TEST(DecayRate, TentDecays) {
  const auto s = solved_system(MapFamily::tent(1.9), 0.0, grid(4096));
  const auto c = autocovariances(s, Observable::cos1(), 30);
  const auto fit = decay_rate(c);
  EXPECT_LT(fit.rho, 1.0);
  EXPECT_GT(fit.rho, 0.0);
}

TEST(LasotaYorke, ConstantIsFixed) {
  const auto p = lasota_yorke_probe(MapFamily::doubling(), 0.0, Observable::constant(1.0), 5, 1024);
  EXPECT_NEAR(p.iterate_norm_alpha, 1.0, 1e-10);
  EXPECT_NEAR(p.phi_l1, 1.0, 1e-12);
}

// Brute-force preimage sum: (L phi)(y) = sum over T x = y of phi(x) / |T'(x)|.
TEST(LasotaYorke, MatchesPreimageSum) {
  const std::size_t n = 1024;
  {
    const auto p = lasota_yorke_probe(MapFamily::doubling(), 0.0, Observable::cos1(), 1, n);
    for (double y : {0.1, 0.37, 0.8}) {
      const double oracle = 0.5 * (std::cos(M_PI * y) + std::cos(M_PI * (y + 1.0)));
      EXPECT_NEAR(p.iterate(y), oracle, 1e-9);
    }
    EXPECT_NEAR(p.iterate_norm_alpha, 0.0, 1e-9);
  }
  {
    const auto phi = Observable::indicator(0.0, 0.5);
    const auto p = lasota_yorke_probe(MapFamily::tent(2.0), 0.0, phi, 1, n);
    for (double y : {0.05, 0.5, 0.93}) {
      const double oracle = 0.5 * (phi(y / 2.0) + phi(1.0 - y / 2.0));
      EXPECT_NEAR(p.iterate(y), oracle, 1e-12);
    }
  }
}

TEST(GreenKubo, Examples) {
  const auto f = MapFamily::doubling();
  EXPECT_NEAR(green_kubo_sigma(f, 0.0, Observable::constant(2.0)).sigma_squared, 0.0, 1e-12);
  EXPECT_NEAR(green_kubo_sigma(f, 0.0, Observable::cos1()).sigma_squared, 0.5, 1e-6);
  const auto ef = green_kubo_sigma(f, 0.0, Observable::erdos_fortet());
  EXPECT_NEAR(ef.sigma_squared, 2.0, 1e-5);
  EXPECT_TRUE(ef.trusted);
  ASSERT_GE(ef.autocovariances.size(), 2u);
  EXPECT_NEAR(ef.autocovariances[0], 1.0, 1e-6);
  EXPECT_NEAR(ef.autocovariances[1], 0.5, 1e-5);
}

// Direct estimator: batch means of Birkhoff sums along one long orbit.
TEST(GreenKubo, AgreesWithBirkhoffVariance) {
  const std::size_t batches = 2000, length = 5000;
  for (const auto& f : {MapFamily::tent(1.9), MapFamily::beta(kGolden), MapFamily::markov()}) {
    const double a = 0.5 * f.window();
    const auto phi = Observable::cos1();
    const auto gk = green_kubo_sigma(f, a, phi);
    double x = 0.1234567;
    for (int i = 0; i < 1000; ++i) x = f.step(a, x);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < length; ++i) {
        s += phi(x);
        x = f.step(a, x);
      }
      sum += s;
      sum_sq += s * s;
    }
    const double mean = sum / batches;
    const double direct = (sum_sq / batches - mean * mean) / length;
    EXPECT_NEAR(direct / gk.sigma_squared, 1.0, 0.05) << to_string(f.kind());
  }
}

TEST(Normalize, Examples) {
  const auto f = MapFamily::doubling();
  const auto ef = normalize_observable(f, 0.0, Observable::erdos_fortet());
  const auto ef_cells = Observable::erdos_fortet().cell_averages(4096);
  ASSERT_EQ(ef.values().size(), 4096u);
  for (std::size_t i = 0; i < 4096; i += 97) {
    EXPECT_NEAR(ef.values()[i], ef_cells[i] / std::sqrt(2.0), 1e-5);
  }
  const auto c = normalize_observable(f, 0.0, Observable::cos1());
  const auto c_cells = Observable::cos1().cell_averages(4096);
  for (std::size_t i = 0; i < 4096; i += 97) {
    EXPECT_NEAR(c.values()[i], c_cells[i] / std::sqrt(0.5), 1e-5);
  }
  EXPECT_THROW(normalize_observable(f, 0.0, Observable::constant(1.0)), DegenerateObservableError);
}

TEST(Normalize, Idempotent) {
  for (const auto& f : {MapFamily::tent(1.9), MapFamily::markov()}) {
    const double a = 0.3 * f.window();
    const auto once = normalize_observable(f, a, Observable::cos1());
    const auto twice = normalize_observable(f, a, once);
    double worst = 0.0;
    for (std::size_t i = 0; i < once.values().size(); ++i) {
      worst = std::max(worst, std::abs(once.values()[i] - twice.values()[i]));
    }
    EXPECT_LT(worst, 1e-6);
    const auto s = solved_system(f, a);
    EXPECT_NEAR(measure_mean(s, once), 0.0, 1e-10);
    EXPECT_NEAR(green_kubo_sigma(s, once).sigma_squared, 1.0, 1e-10);
  }
}

TEST(SigmaScan, DoublingIsFlat) {
  const std::vector<double> a{0.0, 0.25, 0.5, 0.75};
  const auto scan = sigma_scan(MapFamily::doubling(), Observable::erdos_fortet(), a, grid(2048));
  ASSERT_EQ(scan.sigma.size(), 4u);
  for (double s : scan.sigma) EXPECT_NEAR(s, scan.sigma[0], 1e-12);
  ASSERT_TRUE(scan.holder_quotient);
  EXPECT_NEAR(*scan.holder_quotient, 0.0, 1e-9);
}

TEST(SigmaScan, SinglePointHasNoQuotient) {
  const std::vector<double> a{0.02};
  const auto scan = sigma_scan(MapFamily::tent(1.85), Observable::cos1(), a, grid(2048));
  EXPECT_EQ(scan.sigma.size(), 1u);
  EXPECT_FALSE(scan.holder_quotient);
}

TEST(SigmaScan, TentQuotientFinite) {
  const std::vector<double> a{0.0, 0.025, 0.05, 0.075, 0.1};
  Executor ex(2);
  const auto scan =
      sigma_scan(MapFamily::tent(1.85), Observable::cos1(), a, grid(2048), 0.5, ex);
  ASSERT_TRUE(scan.holder_quotient);
  EXPECT_TRUE(std::isfinite(*scan.holder_quotient));
}

TEST(MeasureOf, UniformAndPartialCells) {
  const auto s = solved_system(MapFamily::doubling(), 0.0, grid(16));
  EXPECT_NEAR(measure_of(s, 0.0, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(measure_of(s, 0.1, 0.35), 0.25, 1e-12);
}
