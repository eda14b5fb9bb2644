#include <benchmark/benchmark.h>

#include <random>

#include "fluxmet/qmat.hpp"

using fluxmet::qmat::CMatrix;

namespace {

CMatrix random_hermitian(std::size_t dim, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  CMatrix m(dim);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c) m(r, c) = {n(rng), n(rng)};
  return m.hermitian_part();
}

void BM_expm(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const CMatrix a = std::complex<double>(0, -1) * random_hermitian(dim, 1);
  for (auto _ : state) benchmark::DoNotOptimize(fluxmet::qmat::expm(a));
}
BENCHMARK(BM_expm)->Arg(2)->Arg(4)->Arg(8);

void BM_hermitian_eig(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const CMatrix h = random_hermitian(dim, 2);
  for (auto _ : state) benchmark::DoNotOptimize(fluxmet::qmat::hermitian_eig(h));
}
BENCHMARK(BM_hermitian_eig)->Arg(2)->Arg(4)->Arg(8);

}  // namespace
