#include <benchmark/benchmark.h>

#include "cpt/gibbs.hpp"
#include "cpt/synthetic.hpp"

static void GibbsStep(benchmark::State& state) {
  cpt::ModelParams th = cpt::ModelParams::zeros({2, 1, 1});
  th.k_lambda = -0.2;
  th.k_mu = 1.0;
  th.k_omega = -0.4;
  th.beta_lambda << 0.3, -0.1;
  th.beta_mu << 0.2, 0.1;
  th.beta_omega << 0.05, 0.0;
  cpt::SyntheticSpec spec;
  spec.n_days = int(state.range(0));
  spec.truth = th;
  spec.seed = 6;
  const auto loc = cpt::synthesize(spec).front();
  cpt::ChainConfig cfg;
  cfg.ar_order = 1;
  cfg.ma_order = 1;
  cfg.seed = 7;
  const cpt::PriorConfig prior;
  cpt::ChainState st = cpt::init_chain(loc.data, cfg, prior);
  for (auto _ : state) {
    cpt::gibbs_step(st, loc.data, cfg, prior);
    benchmark::DoNotOptimize(st.log_posterior);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(GibbsStep)->Range(256, 2048)->Complexity();
