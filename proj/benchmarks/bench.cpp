#include <benchmark/benchmark.h>

#include "plateau/cone_calculus.hpp"
#include "plateau/graph_geometry.hpp"
#include "plateau/plateau_solver.hpp"

using namespace plateau;

static void BM_SymmetricJet(benchmark::State& state) {
  const auto kappa = cone::sample_cone(static_cast<int>(state.range(0)), 2, 1, 1).front();
  for (auto _ : state) benchmark::DoNotOptimize(cone::symmetric_jet(kappa, static_cast<int>(state.range(0)) - 1));
}
BENCHMARK(BM_SymmetricJet)->Arg(3)->Arg(5)->Arg(8);

static void BM_RenWangMinK(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto samples = cone::sample_cone(n, n - 1, 64, 5);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(cone::ren_wang_min_K(samples[i++ % samples.size()], 0.1));
}
BENCHMARK(BM_RenWangMinK)->Arg(3)->Arg(4);

static void BM_RadialSolve(benchmark::State& state) {
  solver::SolveConfig c;
  c.sigma_target = 1.5;
  c.eps_schedule = {0.1, 0.01};
  c.mesh.radial_nodes = static_cast<int>(state.range(0));
  const auto d = solver::DomainSpec::ball(3, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(solver::solve_radial(c, d));
}
BENCHMARK(BM_RadialSolve)->Arg(101)->Arg(401)->Unit(benchmark::kMillisecond);

static void BM_GridResidual(benchmark::State& state) {
  solver::MeshSpec m;
  m.ns = static_cast<int>(state.range(0));
  const auto d = solver::DomainSpec::ellipsoid({1.3, 1, 1});
  const auto guess = solver::initial_guess(d, 1.5, 0.01, m, solver::MeshKind::mapped_grid);
  for (auto _ : state) benchmark::DoNotOptimize(solver::pde_residual(guess));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(guess.nodes.size()));
}
BENCHMARK(BM_GridResidual)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
