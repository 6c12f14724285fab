// Microbenchmarks for the stages that dominate wall time: operator assembly,
// the dense eigensolve (the FFH inner loop), the perturbation pipelines, and
// one full isola extraction.  Run manually; not part of ctest.

#include <benchmark/benchmark.h>

#include "bwstab/dispersion.hpp"
#include "bwstab/ffh.hpp"
#include "bwstab/model.hpp"
#include "bwstab/perturbation.hpp"
#include "bwstab/stokes.hpp"

using namespace bwstab;

namespace {

const StokesSeries& series() {
  static const StokesSeries ser = stokes_coefficients(ModelSetup::make(1.0));
  return ser;
}

void BM_stokes_coefficients(benchmark::State& state) {
  const ModelSetup s = ModelSetup::make(1.0);
  for (auto _ : state) {
    StokesSeries ser = stokes_coefficients(s);
    benchmark::DoNotOptimize(ser.c4);
  }
}
BENCHMARK(BM_stokes_coefficients);

void BM_solve_collision(benchmark::State& state) {
  const ModelSetup s = ModelSetup::make(1.0);
  for (auto _ : state) {
    CollisionPoint cp = solve_collision(s, 3);
    benchmark::DoNotOptimize(cp.k);
  }
}
BENCHMARK(BM_solve_collision);

void BM_assemble(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  for (auto _ : state) {
    OperatorAssembly op = assemble(series(), 1e-3, 0.25, N);
    benchmark::DoNotOptimize(op.matrix.data());
  }
  state.SetComplexityN(N);
}
BENCHMARK(BM_assemble)->Arg(16)->Arg(32)->Arg(64)->Arg(128)->Complexity();

void BM_eigenvalues(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const OperatorAssembly op = assemble(series(), 1e-3, 0.25, N);
  for (auto _ : state) {
    SpectrumSlice sl = eigenvalues(op);
    benchmark::DoNotOptimize(sl.lambdas.data());
  }
  state.SetComplexityN(N);
}
BENCHMARK(BM_eigenvalues)
    ->Arg(16)
    ->Arg(32)
    ->Arg(64)
    ->Unit(benchmark::kMillisecond)
    ->Complexity();

void BM_p2_asymptotics(benchmark::State& state) {
  const ModelSetup s = ModelSetup::make(1.0);
  const CollisionPoint cp = solve_collision(s, 2);
  for (auto _ : state) {
    IsolaAsymptotics a = p2_asymptotics(series(), cp);
    benchmark::DoNotOptimize(a.S);
  }
}
BENCHMARK(BM_p2_asymptotics);

void BM_p3_asymptotics(benchmark::State& state) {
  const ModelSetup s = ModelSetup::make(1.0);
  const CollisionPoint cp = solve_collision(s, 3);
  for (auto _ : state) {
    IsolaAsymptotics a = p3_asymptotics(series(), cp);
    benchmark::DoNotOptimize(a.mu4);
  }
}
BENCHMARK(BM_p3_asymptotics);

void BM_extract_isola(benchmark::State& state) {
  const ModelSetup s = ModelSetup::make(1.0);
  const CollisionPoint cp = solve_collision(s, 2);
  const IsolaAsymptotics a = p2_asymptotics(series(), cp);
  const AsymptoticIsola ai = evaluate_isola(a, 1e-3, 4);
  for (auto _ : state) {
    IsolaMeasurement m = extract_isola(series(), 1e-3, 2, ai.floquet_lo,
                                       ai.floquet_hi, ai.lambda_star);
    benchmark::DoNotOptimize(m.growth_max);
  }
}
BENCHMARK(BM_extract_isola)->Unit(benchmark::kSecond)->Iterations(2);

} // namespace

BENCHMARK_MAIN();
