#include <benchmark/benchmark.h>

#include "pemlab/asip.h"
#include "pemlab/paramspace.h"
#include "pemlab/transfer.h"

using namespace pemlab;

static void BM_BuildUlamTent(benchmark::State& state) {
  const auto f = MapFamily::tent(1.9);
  for (auto _ : state) benchmark::DoNotOptimize(build_ulam(f, 0.02, state.range(0)));
}
BENCHMARK(BM_BuildUlamTent)->Arg(1024)->Arg(4096)->Arg(16384);

static void BM_BuildUlamMarkov(benchmark::State& state) {
  const auto f = MapFamily::markov();
  for (auto _ : state) benchmark::DoNotOptimize(build_ulam(f, 0.02, state.range(0)));
}
BENCHMARK(BM_BuildUlamMarkov)->Arg(1024)->Arg(4096);

static void BM_SolveDensity(benchmark::State& state) {
  const auto f = MapFamily::tent(1.9);
  for (auto _ : state) {
    auto s = build_ulam(f, 0.02, state.range(0));
    benchmark::DoNotOptimize(invariant_density(s));
  }
}
BENCHMARK(BM_SolveDensity)->Arg(1024)->Arg(4096);

static void BM_GreenKubo(benchmark::State& state) {
  const auto f = MapFamily::tent(1.9);
  const auto s = solved_system(f, 0.02);
  const auto phi = Observable::cos1();
  for (auto _ : state) benchmark::DoNotOptimize(green_kubo_sigma(s, phi));
}
BENCHMARK(BM_GreenKubo);

static void BM_OrbitTent(benchmark::State& state) {
  const auto f = MapFamily::tent(1.9);
  for (auto _ : state) benchmark::DoNotOptimize(f.orbit(0.02, state.range(0)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OrbitTent)->Arg(64)->Arg(4096);

static void BM_StepTent(benchmark::State& state) {
  const auto f = MapFamily::tent(1.9);
  double x = 0.3;
  for (auto _ : state) {
    for (int i = 0; i < 1000; ++i) x = f.step(0.02, x);
    benchmark::DoNotOptimize(x);
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_StepTent);

static void BM_DyadicOrbit(benchmark::State& state) {
  DyadicOrbit o(0.3, 1, 2);
  for (auto _ : state) {
    for (int i = 0; i < 1000; ++i) o.advance();
    benchmark::DoNotOptimize(o.word());
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_DyadicOrbit);

static void BM_PartitionTent(benchmark::State& state) {
  const auto f = MapFamily::tent(1.9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_partition(f, 0.0, 0.05, state.range(0)));
  }
}
BENCHMARK(BM_PartitionTent)->Arg(8)->Arg(12);

static void BM_XiProcess(benchmark::State& state) {
  const auto f = MapFamily::tent(1.9);
  const auto phi = Observable::cos1();
  const auto norm = solve_normalization(f, phi, 0.02);
  for (auto _ : state) benchmark::DoNotOptimize(xi_process(f, phi, 0.02, 100000, norm));
  state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_XiProcess);
BENCHMARK_MAIN();
