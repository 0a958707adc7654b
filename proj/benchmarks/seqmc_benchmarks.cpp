#include <benchmark/benchmark.h>

#include "seqmc/energy.hpp"
#include "seqmc/oracle.hpp"
#include "seqmc/sampler.hpp"
#include "seqmc/tabular_model.hpp"

namespace {

using namespace seqmc;

void BM_EnergyRaw(benchmark::State& state) {
  const auto length = static_cast<std::size_t>(state.range(0));
  const auto model = TabularMLM::generate(7, 3, length, 2.0);
  const Sequence seq(std::vector<Token>(length, 1), model.vocab());
  for (auto _ : state) benchmark::DoNotOptimize(energy_raw(model, seq).value);
}
BENCHMARK(BM_EnergyRaw)->Arg(3)->Arg(6)->Arg(9);

void BM_TransitionKernel(benchmark::State& state) {
  const auto length = static_cast<std::size_t>(state.range(0));
  const auto model = TabularMLM::generate(7, 3, length, 2.0);
  for (auto _ : state) {
    const auto k = oracle::transition_kernel(model, {SamplerKind::mh, EnergyKind::raw, 1.0, 1}, {});
    benchmark::DoNotOptimize(k.entries().data());
  }
}
BENCHMARK(BM_TransitionKernel)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_StationaryDistribution(benchmark::State& state) {
  const auto model = TabularMLM::generate(7, 3, 4, 2.0);
  const auto k = oracle::transition_kernel(model, {SamplerKind::mh, EnergyKind::raw, 1.0, 1}, {});
  for (auto _ : state) benchmark::DoNotOptimize(oracle::stationary_distribution(k).data());
}
BENCHMARK(BM_StationaryDistribution)->Unit(benchmark::kMillisecond);

void BM_RunChain(benchmark::State& state) {
  const auto model = TabularMLM::generate(7, 3, 6, 2.0);
  SamplerConfig config;
  config.kind = state.range(0) == 0 ? SamplerKind::mh : SamplerKind::degenerate_gibbs;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto result = run_chain(model, config, RandomStream(++seed));
    benchmark::DoNotOptimize(result.final_state.tokens().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(config.epochs * 6));
}
BENCHMARK(BM_RunChain)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
