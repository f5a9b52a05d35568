#include <benchmark/benchmark.h>

#include "mlate/forward_model.hpp"
#include "mlate/gmm.hpp"
#include "mlate/moments.hpp"
#include "mlate/montecarlo.hpp"

using namespace mlate;

namespace {

void BM_Identify(benchmark::State& state) {
  const DesignSpec d = design(1);
  const CellStats st = cell_stats(generate(d, 100000, 1).data);
  for (auto _ : state) benchmark::DoNotOptimize(identify(st, Mode::CaseII));
}
BENCHMARK(BM_Identify);

void BM_SampleMoments(benchmark::State& state) {
  const DesignSpec d = design(1);
  const Dataset ds = generate(d, static_cast<std::size_t>(state.range(0)), 2).data;
  const ParamVector theta = true_params(d);
  for (auto _ : state) benchmark::DoNotOptimize(sample_moments(ds, theta));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleMoments)->Arg(1000)->Arg(100000);

void BM_Estimate(benchmark::State& state) {
  const Dataset ds = generate(design(1), static_cast<std::size_t>(state.range(0)), 3).data;
  GmmConfig cfg;
  cfg.weighting = state.range(1) ? Weighting::TwoStepOptimal : Weighting::Identity;
  for (auto _ : state) benchmark::DoNotOptimize(estimate(ds, cfg));
}
BENCHMARK(BM_Estimate)->Args({1000, 0})->Args({1000, 1})->Args({100000, 0})->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state) {
  const DesignSpec d = design(2);
  std::uint64_t stream = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate(d, static_cast<std::size_t>(state.range(0)), 4, stream++));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Generate)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
