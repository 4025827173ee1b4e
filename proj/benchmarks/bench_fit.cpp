#include <benchmark/benchmark.h>

#include "funfuse/ecm.hpp"
#include "funfuse/simulate.hpp"

using namespace funfuse;

namespace {

Simulated scenario_data(int n_per_cluster) {
  ScenarioSpec spec;
  spec.scenario = Scenario::I;
  spec.sigma_e = 1.0;
  spec.n_per_cluster = n_per_cluster;
  spec.seed = 7;
  return generate(spec);
}

}  // namespace

static void BM_e_step(benchmark::State& state) {
  Simulated sim = scenario_data(static_cast<int>(state.range(0)));
  BSplineBasis basis = study_basis();
  DesignCache cache(sim.dataset, basis);
  Initialization init = initialize(sim.dataset, basis, 2, 1);
  for (auto _ : state) benchmark::DoNotOptimize(e_step(cache, init.params));
  state.SetItemsProcessed(state.iterations() * sim.dataset.n_curves());
}
BENCHMARK(BM_e_step)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_initialize(benchmark::State& state) {
  Simulated sim = scenario_data(static_cast<int>(state.range(0)));
  BSplineBasis basis = study_basis();
  for (auto _ : state)
    benchmark::DoNotOptimize(initialize(sim.dataset, basis, 2, 1));
}
BENCHMARK(BM_initialize)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_ecm_sweep(benchmark::State& state) {
  // one full fit capped at a handful of sweeps, dominated by the E-step
  // and the fused mean update
  Simulated sim = scenario_data(static_cast<int>(state.range(0)));
  BSplineBasis basis = study_basis();
  FitConfig config;
  config.n_clusters = 2;
  config.lambda_fuse = 100.0;
  config.lambda_smooth = 0.1;
  config.max_ecm_iters = 5;
  config.seed = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(fit(sim.dataset, basis, config));
}
BENCHMARK(BM_ecm_sweep)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
