#include <benchmark/benchmark.h>

#include "rvlab/simulator.hpp"

using namespace rvlab;

namespace {

void BM_SimulateConstant(benchmark::State& state) {
  const ModelSpec m;
  std::uint64_t stream = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(m, state.range(0), 1, stream++));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateConstant)->Arg(23400);

void BM_SimulateHeston(benchmark::State& state) {
  ModelSpec m;
  m.vol = MeanRevertingVolLeverage{};
  std::uint64_t stream = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(m, state.range(0), 1, stream++));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateHeston)->Arg(23400);

void BM_SimulateOUJump(benchmark::State& state) {
  ModelSpec m;
  m.vol = OUJumpVol{};
  m.price_jumps = PriceJumpOverlay{};
  std::uint64_t stream = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(m, state.range(0), 1, stream++));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateOUJump)->Arg(23400);

}  // namespace
