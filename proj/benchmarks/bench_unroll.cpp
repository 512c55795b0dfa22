#include <benchmark/benchmark.h>

#include "cpt/latent_arma.hpp"
#include "cpt/synthetic.hpp"

namespace {

cpt::SyntheticSpec spec_for(int n_days) {
  cpt::ModelParams th = cpt::ModelParams::zeros({2, 5, 5});
  th.k_lambda = -0.2;
  th.k_mu = 1.0;
  th.k_omega = -0.4;
  th.beta_lambda << 0.3, -0.1;
  th.beta_mu << 0.2, 0.1;
  th.beta_omega << 0.05, 0.0;
  th.phi_lambda[0] = 0.2;
  th.phi_mu[0] = 0.1;
  th.gamma_lambda[0] = 0.1;
  th.gamma_mu[0] = 0.1;
  cpt::SyntheticSpec spec;
  spec.n_days = n_days;
  spec.truth = th;
  spec.seed = 5;
  return spec;
}

}  // namespace

static void LogLikelihood(benchmark::State& state) {
  const cpt::SyntheticSpec spec = spec_for(int(state.range(0)));
  const auto loc = cpt::synthesize(spec).front();
  for (auto _ : state)
    benchmark::DoNotOptimize(cpt::log_likelihood(spec.truth, loc.data, loc.z_truth));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(LogLikelihood)->Range(256, 4096)->Complexity();
