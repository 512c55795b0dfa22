#include <benchmark/benchmark.h>

#include "cpt/compound_poisson.hpp"
#include "cpt/rng.hpp"

static void CpLogDensity(benchmark::State& state) {
  const cpt::CpParams p{1.2, 3.0, 0.8};
  double y = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cpt::cp_log_density(y, p));
    y = y < 50.0 ? y * 1.7 : 0.05;
  }
}
BENCHMARK(CpLogDensity);

static void CpPosteriorZMean(benchmark::State& state) {
  const cpt::CpParams p{1.2, 3.0, 0.8};
  for (auto _ : state) benchmark::DoNotOptimize(cpt::cp_posterior_z_mean(7.5, p));
}
BENCHMARK(CpPosteriorZMean);

static void CpSample(benchmark::State& state) {
  const cpt::CpParams p{1.2, 3.0, 0.8};
  cpt::Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(cpt::cp_sample(p, rng));
}
BENCHMARK(CpSample);
