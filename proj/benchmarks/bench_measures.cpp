#include <benchmark/benchmark.h>

#include "rvlab/asymptotics.hpp"
#include "rvlab/realized.hpp"
#include "rvlab/simulator.hpp"

using namespace rvlab;

namespace {

ReturnSeries sample_returns(std::size_t n, std::size_t dim = 1) {
  ModelSpec m;
  m.dim = dim;
  if (dim > 1) m.correlation = Eigen::MatrixXd::Identity(dim, dim);
  return returns_from_path(as_log_price_path(simulate(m, n, 1)), n);
}

void BM_RealizedVariance(benchmark::State& state) {
  const auto ret = sample_returns(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(realized_variance(ret, 0, 1.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RealizedVariance)->Arg(1000)->Arg(23400);

void BM_Bipower(benchmark::State& state) {
  const auto ret = sample_returns(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(realized_bipower(ret, 0, 1.0, 1.0, 1.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Bipower)->Arg(1000)->Arg(23400);

void BM_Quadpower(benchmark::State& state) {
  const auto ret = sample_returns(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(quarticity_quadpower(ret, 0, 1.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Quadpower)->Arg(1000)->Arg(23400);

void BM_Covariation(benchmark::State& state) {
  const auto ret = sample_returns(1000, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(realized_covariation(ret, 1.0));
}
BENCHMARK(BM_Covariation)->Arg(2)->Arg(5);

void BM_JumpTest(benchmark::State& state) {
  const auto ret = sample_returns(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(jump_test(ret, 0, 1.0));
}
BENCHMARK(BM_JumpTest)->Arg(1000)->Arg(23400);

}  // namespace

BENCHMARK_MAIN();
