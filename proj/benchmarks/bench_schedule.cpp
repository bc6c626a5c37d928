#include <benchmark/benchmark.h>

#include "dermanet/rng.hpp"
#include "dermanet/schedule.hpp"

using namespace dermanet;

static void BM_LrAt(benchmark::State& state) {
  const auto plan = SchedulePlan::reference_recipe(313);
  Rng rng(1);
  std::vector<long> steps(1024);
  for (auto& s : steps) {
    s = static_cast<long>(rng.bounded(
        static_cast<std::uint64_t>(plan.total_steps())));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan.lr_at(steps[i++ & 1023], 2));
  }
}
BENCHMARK(BM_LrAt);

static void BM_ScheduleTable(benchmark::State& state) {
  const auto plan = SchedulePlan::reference_recipe(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan.table());
  }
  state.SetItemsProcessed(state.iterations() * plan.total_steps());
}
BENCHMARK(BM_ScheduleTable)->Arg(7)->Arg(313);

static void BM_RestartSteps(benchmark::State& state) {
  const auto plan = SchedulePlan::reference_recipe(313);
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan.restart_steps());
  }
}
BENCHMARK(BM_RestartSteps);
