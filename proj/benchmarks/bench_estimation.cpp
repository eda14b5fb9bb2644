#include <benchmark/benchmark.h>

#include <numbers>

#include "fluxmet/estimation.hpp"

namespace fe = fluxmet::estimation;

namespace {

void BM_run_adaptive(benchmark::State& state) {
  fe::AdaptiveConfig c;
  c.task = state.range(0) == 0 ? fe::Task::theta : fe::Task::omega;
  c.true_value = c.task == fe::Task::theta ? std::numbers::pi / 4 : 0.3;
  c.initial_guess = c.task == fe::Task::theta ? 0.0 : 0.2;
  c.grid = fe::AdaptiveConfig::default_grid(c.task);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    c.seed = seed++;
    benchmark::DoNotOptimize(fe::run_adaptive(c));
  }
}
BENCHMARK(BM_run_adaptive)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
