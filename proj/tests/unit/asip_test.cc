#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pemlab/asip.h"
#include "pemlab/error.h"
#include "pemlab/stats.h"

using namespace pemlab;

namespace {

NormalizerOptions small_normalizer() {
  NormalizerOptions o;
  o.solver.grid_count = 1024;
  o.sigma_grid = 16;
  o.holdout = 4;
  o.max_interpolation_error = 0.05;
  return o;
}

}  // namespace

TEST(XiProcess, Examples) {
  const auto f = MapFamily::doubling();
  EXPECT_THROW(xi_process(f, Observable::constant(1.0), 0.3, 5), DegenerateObservableError);
  const auto ef = Observable::erdos_fortet();
  const auto xi = xi_process(f, ef, 0.3, 2);
  ASSERT_EQ(xi.values.size(), 2u);
  EXPECT_NEAR(xi.values[0], ef(0.6) / std::sqrt(2.0), 1e-5);
  EXPECT_NEAR(xi.values[1], ef(0.2) / std::sqrt(2.0), 1e-5);
  EXPECT_TRUE(xi_process(MapFamily::tent(1.9), ef, 0.01, 0).values.empty());
}

// Mean of the normalized process along one orbit shrinks like n^(-1/2).
TEST(XiProcess, NormalizationConsistency) {
  const std::size_t n = 1000000;
  for (const auto& f : {MapFamily::tent(1.9), MapFamily::beta((1 + std::sqrt(5.0)) / 2),
                        MapFamily::markov(), MapFamily::doubling()}) {
    const auto xi = xi_process(f, Observable::cos1(), 0.3 * f.window(), n);
    double mean = 0.0;
    for (double v : xi.values) mean += v / n;
    EXPECT_LE(std::abs(mean), 5.0 / std::sqrt(static_cast<double>(n))) << to_string(f.kind());
  }
}

// Fixed map, random starting points: normalized Birkhoff sums are close to Gaussian.
TEST(Clt, FixedParameterOverStartingPoints) {
  const auto f = MapFamily::tent(1.9);
  const double a = 0.02;
  const auto phi = Observable::cos1();
  const auto norm = solve_normalization(f, phi, a);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 10000;
  std::vector<double> sums(2000);
  for (double& s : sums) {
    double x = u(rng), total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x = f.step(a, x);
      total += phi(x) - norm.mean;
    }
    s = total / (norm.sigma * std::sqrt(static_cast<double>(n)));
  }
  EXPECT_LE(stats::ks_distance_normal(sums), 0.05);
}

TEST(Clt, SingleSampleFlagsInsufficient) {
  CltOptions o;
  o.n = 100;
  o.samples = 1;
  o.normalizer = small_normalizer();
  const auto r = clt_experiment(MapFamily::doubling(), Observable::cos1(), o);
  EXPECT_TRUE(r.statistics["insufficient_samples"].get<bool>());
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.verdict_note, "insufficient samples");
}

TEST(Clt, DoublingSmallRunPasses) {
  CltOptions o;
  o.n = 2000;
  o.samples = 1000;
  o.normalizer = small_normalizer();
  Executor ex(4);
  const auto r = clt_experiment(MapFamily::doubling(), Observable::cos1(), o, ex);
  EXPECT_LE(r.statistics["ks_distance"].get<double>(), 0.05);
  EXPECT_TRUE(r.pass);
}

TEST(Lil, Checkpoints) {
  const auto c = lil_checkpoints(1000000, 1.5);
  ASSERT_FALSE(c.empty());
  EXPECT_GE(c.front(), kLilFirstIndex);
  EXPECT_EQ(c.back(), 1000000u);
  for (std::size_t k = 1; k < c.size(); ++k) EXPECT_LT(c[k - 1], c[k]);
  for (std::size_t v : lil_checkpoints(10, 1.5)) EXPECT_GE(v, kLilFirstIndex);
}

TEST(Lil, RunningMaxIsMonotone) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<double> xi(100000);
  for (double& v : xi) v = g(rng);
  const auto c = lil_checkpoints(xi.size(), 1.5);
  const auto m = lil_running_max(xi, c);
  ASSERT_EQ(m.size(), c.size());
  for (std::size_t k = 1; k < m.size(); ++k) EXPECT_GE(m[k], m[k - 1]);
}

TEST(Lil, SeededRepeatIsIdentical) {
  LilOptions o;
  o.n_max = 20000;
  o.samples = 8;
  o.normalizer = small_normalizer();
  const auto f = MapFamily::tent(1.9);
  const auto r1 = lil_experiment(f, Observable::cos1(), o);
  Executor ex(3);
  const auto r2 = lil_experiment(f, Observable::cos1(), o, ex);
  EXPECT_EQ(r1.to_json(false).dump(), r2.to_json(false).dump());
  EXPECT_DOUBLE_EQ(r1.statistics["monotone_fraction"].get<double>(), 1.0);
}

TEST(VarianceGrowth, Examples) {
  VarianceGrowthOptions o;
  o.normalizer = small_normalizer();
  const auto f = MapFamily::doubling();
  EXPECT_EQ(variance_growth(f, Observable::cos1(), 100, 0, o).value, 0.0);
  EXPECT_NEAR(variance_growth(f, Observable::cos1(), 5, 1, o).value, 1.0, 0.05);
  EXPECT_NEAR(variance_growth(f, Observable::cos1(), 100, 10, o).value, 10.0, 1.0);
}

// With correlated increments a single term has E xi_m^2 = C_0 / sigma^2, not 1.
// Oracle: that ratio from the transfer operator, averaged over the window.
TEST(VarianceGrowth, SingleTermMatchesLagZeroRatio) {
  VarianceGrowthOptions o;
  o.normalizer = small_normalizer();
  const auto f = MapFamily::tent(1.9);
  const auto phi = Observable::cos1();
  double oracle = 0.0;
  const int G = 20;
  for (int g = 0; g < G; ++g) {
    const auto v = green_kubo_sigma(f, f.window() * (g + 0.5) / G, phi);
    oracle += v.autocovariances[0] / v.sigma_squared / G;
  }
  EXPECT_NEAR(variance_growth(f, phi, 20, 1, o).value, oracle, 0.1);
}

TEST(Blocks, Examples) {
  const auto one = build_blocks(1);
  ASSERT_EQ(one.M, 1u);
  EXPECT_EQ(one.blocks[0].first, 1u);
  EXPECT_EQ(one.blocks[0].size, 1u);

  const auto ten = build_blocks(10);
  ASSERT_EQ(ten.M, 6u);
  const std::vector<std::size_t> sizes{1, 1, 2, 2, 2, 3};
  const std::vector<std::size_t> firsts{1, 2, 3, 5, 7, 9};
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_EQ(ten.blocks[j].size, sizes[j]);
    EXPECT_EQ(ten.blocks[j].first, firsts[j]);
  }

  const auto hundred = build_blocks(100);
  EXPECT_LE(static_cast<double>(hundred.M), 4.0 * std::pow(100.0, 0.6));
}

TEST(Blocks, CoverWithoutRepeats) {
  for (std::size_t N : {1u, 2u, 7u, 64u, 1000u, 12345u}) {
    const auto b = build_blocks(N);
    std::size_t next = 1;
    for (const auto& blk : b.blocks) {
      EXPECT_EQ(blk.first, next);
      next = blk.last() + 1;
    }
    EXPECT_GE(b.blocks.back().last(), N);
    EXPECT_LT(b.blocks.back().first, N + 1);
  }
}

TEST(Blocks, ExactCubeRoots) {
  EXPECT_EQ(block_size(1), 1u);
  EXPECT_EQ(block_size(8), 4u);
  EXPECT_EQ(block_size(26), 8u);
  EXPECT_EQ(block_size(27), 9u);
  EXPECT_EQ(block_size(999), 99u);
  EXPECT_EQ(block_size(1000), 100u);
  EXPECT_EQ(refinement_depth(1, 0.3), 2u);
}

TEST(Blocks, SumsCutAtN) {
  auto b = build_blocks(10);
  const std::vector<double> xi{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  block_sums(b, xi);
  const std::vector<double> expected{1, 2, 7, 11, 15, 19};
  ASSERT_EQ(b.y.size(), 6u);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(b.y[j], expected[j]);
}

TEST(BlockLln, SingleBlockAndRepeat) {
  const auto f = MapFamily::doubling();
  const auto phi = Observable::cos1();
  const auto norm = solve_normalization(f, phi, 0.3);
  const auto r1 = block_lln_check(f, phi, 0.3, 1, 0.41, norm);
  EXPECT_TRUE(std::isfinite(r1.ratio));
  EXPECT_EQ(r1.M, 1u);
  const auto a = block_lln_check(f, phi, 0.3, 10000, 0.41, norm, 5, 7);
  const auto b = block_lln_check(f, phi, 0.3, 10000, 0.41, norm, 5, 7);
  EXPECT_EQ(a.ratio, b.ratio);
  EXPECT_THROW(block_lln_check(f, phi, 0.3, 100, 0.4, norm), DomainError);
}

// For the indicator of [0, 1/2] under doubling, xi_1 depends on the second
// binary digit of a only, so chi_1 on quarter cells is exactly +-1.
TEST(StepFunctionChi, DoublingIndicatorCellwise) {
  const auto f = MapFamily::doubling();
  const auto phi = Observable::indicator(0.0, 0.5);
  const NormalizationFn norm = [](double) { return Normalization{0.5, 0.5}; };
  const auto p = build_partition(f, 0.0, 1.0, refinement_depth(1, 0.3));
  const auto chi = step_function_chi(f, phi, 1, 0.3, p, norm);
  const std::vector<double> expected{1, -1, 1, -1};
  ASSERT_EQ(chi.values.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(chi.values[k], expected[k], 1e-12);
  EXPECT_EQ(chi_error_measure(f, phi, 1, chi, norm, 1e-9, 1000, 3), 0.0);
  const auto wrong = build_partition(f, 0.0, 1.0, 3);
  EXPECT_THROW(step_function_chi(f, phi, 1, 0.3, wrong, norm), UsageError);
}

TEST(ErdosFortet, SingleSampleIsDegenerate) {
  ErdosFortetOptions o;
  o.n = 50;
  o.samples = 1;
  const auto r = erdos_fortet(o);
  EXPECT_FALSE(r.verdict_applicable);
  EXPECT_TRUE(r.statistics["degenerate"].get<bool>());
}

TEST(ErdosFortet, SmallPowerRunLooksGaussian) {
  ErdosFortetOptions o;
  o.n = 500;
  o.samples = 20000;
  Executor ex(4);
  const auto r = erdos_fortet(o, ex);
  EXPECT_LE(r.statistics["ks_distance"].get<double>(), 0.03);
}

TEST(Typicality, Examples) {
  const auto empty = typicality_check(MapFamily::doubling(), {{0.0, 0.5}}, 0.3, 0);
  EXPECT_FALSE(empty.verdict_applicable);
  const auto full = typicality_check(MapFamily::tent(2.0), {{0.0, 1.0}}, 0.0, 5000);
  EXPECT_NEAR(full.statistics["max_discrepancy"].get<double>(), 0.0, 1e-12);
  const auto half = typicality_check(MapFamily::doubling(), {{0.0, 0.5}}, 0.3, 1000000);
  EXPECT_LE(half.statistics["max_discrepancy"].get<double>(), 3e-3);
}

TEST(Typicality, DyadicIndicators) {
  const auto v = random_dyadic_indicators(50, 6, 1, 2);
  ASSERT_EQ(v.size(), 50u);
  for (const auto& iv : v) {
    const double len = iv.hi - iv.lo;
    const double level = -std::log2(len);
    EXPECT_NEAR(level, std::round(level), 1e-12);
    EXPECT_GE(std::round(level), 1.0);
    EXPECT_LE(std::round(level), 6.0);
    EXPECT_NEAR(std::fmod(iv.lo / len, 1.0), 0.0, 1e-12);
  }
}
