#include <benchmark/benchmark.h>

#include "semitrotter/commutator_lab.hpp"
#include "semitrotter/model.hpp"
#include "semitrotter/splitting.hpp"

namespace {

using namespace semitrotter;

const double kPi = 3.14159265358979323846;

struct Setup {
  ComplexMatrix a, b, o;
};

Setup setup(std::size_t n) {
  const double h = 1.0 / static_cast<double>(n);
  const Grid g(-kPi, kPi, n);
  const ModelParams p{h, 0.5, parse_expr("cos(x)"), g};
  return {build_A(p), build_B(p), build_observable({default_observable_terms(), h}, g, SchemeKind::FiniteDifference)};
}

void BM_TrotterEvolve(benchmark::State& state) {
  const Setup s = setup(static_cast<std::size_t>(state.range(0)));
  const StagePlan plan = suzuki_plan(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(trotter_evolve(plan, s.a, s.b, 1.0 / 16, 8));
}
BENCHMARK(BM_TrotterEvolve)->Args({64, 2})->Args({64, 6})->Args({256, 2})->Args({256, 4})->Unit(benchmark::kMillisecond);

void BM_ExactUnitary(benchmark::State& state) {
  const Setup s = setup(static_cast<std::size_t>(state.range(0)));
  const ComplexMatrix h = s.a + s.b;
  for (auto _ : state) benchmark::DoNotOptimize(exact_unitary(h, 0.5));
}
BENCHMARK(BM_ExactUnitary)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SpectralNorm(benchmark::State& state) {
  const Setup s = setup(static_cast<std::size_t>(state.range(0)));
  const ComplexMatrix c = commutator(s.a, commutator(s.b, s.o));
  for (auto _ : state) benchmark::DoNotOptimize(spectral_norm(c));
}
BENCHMARK(BM_SpectralNorm)->Arg(64)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_BetaComm(benchmark::State& state) {
  const Setup s = setup(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(compute_beta_comm(2, s.a, s.b, s.o));
}
BENCHMARK(BM_BetaComm)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
