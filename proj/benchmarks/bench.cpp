#include <benchmark/benchmark.h>

#include "spintunnel/disorder.hpp"
#include "spintunnel/greens.hpp"
#include "spintunnel/model.hpp"
#include "spintunnel/spectral.hpp"

using namespace spintunnel;

namespace {

OperatorMatrix make_spin_h(int radius) {
  const LatticeBox box(1, Coord{0}, radius);
  ModelParams params;
  params.zeta = SparseVec::delta(Coord{0});
  const auto V = sample_potential(box, DisorderSpec::uniform(0.5, 7));
  return build_spin_H(box, params, V);
}

void BM_Diagonalize(benchmark::State& state) {
  const OperatorMatrix h = make_spin_h(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    EigenSystem es = diagonalize(h);
    benchmark::DoNotOptimize(es.eigenvalues.sum());
  }
  state.SetComplexityN(h.dim());
}
BENCHMARK(BM_Diagonalize)->Arg(50)->Arg(100)->Arg(200)->Complexity();

void BM_ResolventColumn(benchmark::State& state) {
  const OperatorMatrix h = make_spin_h(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    ResolventSolver solver(h, {0.0, 1e-2});
    benchmark::DoNotOptimize(solver.entry({Coord{0}, +1}, {Coord{5}, -1}));
  }
}
BENCHMARK(BM_ResolventColumn)->Arg(50)->Arg(100)->Arg(200);

void BM_SamplePotential(benchmark::State& state) {
  const LatticeBox box(1, Coord{0}, static_cast<int>(state.range(0)));
  const DisorderSpec spec = DisorderSpec::uniform(0.5, 7);
  for (auto _ : state) {
    auto V = sample_potential(box, spec);
    benchmark::DoNotOptimize(V.data());
  }
}
BENCHMARK(BM_SamplePotential)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
