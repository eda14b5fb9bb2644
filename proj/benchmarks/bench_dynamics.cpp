#include <benchmark/benchmark.h>

#include <numbers>

#include "fluxmet/dynamics.hpp"

namespace fd = fluxmet::dynamics;

namespace {

void BM_lindblad_evolve(benchmark::State& state) {
  const auto model = fd::theta_model(0.1, 0.05, std::numbers::pi / 4);
  const auto rho0 = fluxmet::qmat::CMatrix::projector(fd::bell_state());
  const double dt = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fd::lindblad_evolve(model, rho0, 5, dt));
}
BENCHMARK(BM_lindblad_evolve)->Arg(100)->Arg(1000);

}  // namespace
