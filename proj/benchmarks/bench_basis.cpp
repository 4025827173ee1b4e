#include <benchmark/benchmark.h>

#include "funfuse/basis.hpp"

using funfuse::BSplineBasis;
using funfuse::make_basis;

static void BM_evaluate(benchmark::State& state) {
  BSplineBasis basis = make_basis(4, static_cast<int>(state.range(0)), {0.0, 1.0});
  double t = 0.0;
  for (auto _ : state) {
    t += 0.001;
    if (t > 1.0) t -= 1.0;
    benchmark::DoNotOptimize(basis.evaluate(t));
  }
}
BENCHMARK(BM_evaluate)->Arg(8)->Arg(26)->Arg(96);

static void BM_design_matrix(benchmark::State& state) {
  BSplineBasis basis = make_basis(4, 26, {0.0, 1.0});
  const int n = static_cast<int>(state.range(0));
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = i / (n - 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(basis.design_matrix(grid));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_design_matrix)->Arg(50)->Arg(500);

static void BM_roughness_matrix(benchmark::State& state) {
  BSplineBasis basis = make_basis(4, static_cast<int>(state.range(0)), {0.0, 1.0});
  for (auto _ : state) benchmark::DoNotOptimize(basis.roughness_matrix(2));
}
BENCHMARK(BM_roughness_matrix)->Arg(26)->Arg(96);

static void BM_step_knots(benchmark::State& state) {
  BSplineBasis basis = make_basis(4, 26, {0.0, 1.0});
  for (auto _ : state) benchmark::DoNotOptimize(basis.step_knots());
}
BENCHMARK(BM_step_knots);

BENCHMARK_MAIN();
