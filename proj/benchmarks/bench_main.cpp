#include <benchmark/benchmark.h>

#include "convhawkes/estimation.hpp"
#include "convhawkes/evaluation.hpp"
#include "convhawkes/prediction.hpp"
#include "convhawkes/simulation.hpp"

using namespace convhawkes;

namespace {

BivariateModel reference() {
  BivariateModel m;
  m.params.cc = {0.89, 3.73};
  m.params.ca = {14.67, 38.35};
  m.params.ac = {3.76, 4.21};
  m.params.aa = {20.22, 48.28};
  return m;
}

const Dataset& corpus() {
  static const Dataset d = simulate_dataset(HawkesModel{reference()}, default_samplers(), 2000, 1);
  return d;
}

void bm_simulate(benchmark::State& state) {
  const HawkesModel m = reference();
  const MarkSamplers ms = default_samplers();
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_dataset(m, ms, static_cast<std::size_t>(state.range(0)), 7));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_simulate)->Arg(1000)->Unit(benchmark::kMillisecond);

void bm_log_likelihood(benchmark::State& state) {
  const HawkesModel m = reference();
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(m, corpus()));
}
BENCHMARK(bm_log_likelihood)->Unit(benchmark::kMillisecond);

void bm_estep(benchmark::State& state) {
  BivariateModel m = reference();
  if (state.range(0) == 1) m.marks = ConcurrencyMark{};
  const EStepRoute route = state.range(1) == 0 ? EStepRoute::recursive : EStepRoute::pairwise;
  for (auto _ : state) {
    EStepStats total;
    for (const auto& c : corpus().conversations) total.add(estep_stats(m, c, route));
    benchmark::DoNotOptimize(total);
  }
}
BENCHMARK(bm_estep)->Args({0, 0})->Args({0, 1})->Args({1, 0})->Unit(benchmark::kMillisecond);

void bm_fit_em(benchmark::State& state) {
  FitConfig cfg;
  cfg.kind = ModelKind::bhp;
  cfg.max_iterations = 20;
  for (auto _ : state) benchmark::DoNotOptimize(fit_em(corpus(), cfg));
}
BENCHMARK(bm_fit_em)->Unit(benchmark::kMillisecond);

void bm_prediction(benchmark::State& state) {
  const HawkesModel m = reference();
  const std::vector<double> deltas{5.0, 30.0, kInfinity};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        evaluate_prediction(m, corpus(), SamplingStrategy{SamplingStrategy::Kind::activity}, deltas));
  }
}
BENCHMARK(bm_prediction)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
