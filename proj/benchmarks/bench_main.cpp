#include <benchmark/benchmark.h>

#include "posaudit/rum.hpp"
#include "posaudit/stats.hpp"

namespace {

using namespace posaudit;

void BM_BinomTwoSided(benchmark::State& state) {
  const auto n = state.range(0);
  for (auto _ : state)
    benchmark::DoNotOptimize(stats::binom_two_sided(n / 2 + n / 8, n, 0.5));
}
BENCHMARK(BM_BinomTwoSided)->Arg(100)->Arg(1000)->Arg(10000);

void BM_FisherExact(benchmark::State& state) {
  const auto m = state.range(0);
  stats::ContingencyTable t{m, m / 3, m / 4, m};
  for (auto _ : state) benchmark::DoNotOptimize(stats::fisher_exact_two_sided(t));
}
BENCHMARK(BM_FisherExact)->Arg(50)->Arg(500);

void BM_BootstrapDeltaH(benchmark::State& state) {
  std::vector<bool> order(1024), gender(1024);
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i % 100 < 93;
    gender[i] = i % 100 < 56;
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(
        stats::bootstrap_delta_h(order, gender, static_cast<int>(state.range(0)), 1));
}
BENCHMARK(BM_BootstrapDeltaH)->Arg(1000)->Arg(10000);

RandomUtilityConfig worked_example() {
  RandomUtilityConfig cfg;
  cfg.utilities = {{"a", 5.0}, {"b", 5.1}, {"c", 4.8}};
  cfg.position_boosts = {0.2, 0.0, 0.0};
  return cfg;
}

void BM_SimulateChoicePair(benchmark::State& state) {
  const auto cfg = worked_example();
  const Arrangement arr{{"a", "b"}};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_choice(cfg, arr, 1.0, ++seed));
}
BENCHMARK(BM_SimulateChoicePair);

void BM_NwiseProbMc(benchmark::State& state) {
  const auto cfg = worked_example();
  const Arrangement arr{{"a", "b", "c"}};
  for (auto _ : state)
    benchmark::DoNotOptimize(nwise_prob_mc(cfg, arr, 1.0, state.range(0), 7));
}
BENCHMARK(BM_NwiseProbMc)->Arg(10000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
