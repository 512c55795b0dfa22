#include <benchmark/benchmark.h>

#include "cpt/grid.hpp"
#include "cpt/rng.hpp"

static void RegridSpline(benchmark::State& state) {
  const int n = int(state.range(0));
  std::vector<double> coarse_lat(9), coarse_lon(9), fine_lat, fine_lon;
  for (int i = 0; i < 9; ++i) {
    coarse_lat[std::size_t(i)] = 50.0 + 0.5 * i;
    coarse_lon[std::size_t(i)] = -6.0 + 0.5 * i;
  }
  for (int i = 0; i < n; ++i) {
    fine_lat.push_back(50.1 + 3.8 * i / n);
    fine_lon.push_back(-5.9 + 3.8 * i / n);
  }
  cpt::GridTimeSeries g = cpt::GridTimeSeries::make({0}, coarse_lat, coarse_lon, "K");
  cpt::Rng rng(8);
  for (double& v : g.values) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(cpt::regrid_spline(g, fine_lat, fine_lon));
  state.SetComplexityN(n);
}
BENCHMARK(RegridSpline)->Range(16, 256)->Complexity();
