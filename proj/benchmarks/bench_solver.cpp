#include <benchmark/benchmark.h>

#include "hmlab/dirichlet.hpp"
#include "hmlab/experiment.hpp"

using namespace hmlab;

static void BuildPolarMesh(benchmark::State& state) {
  const double R = static_cast<double>(state.range(0));
  for (auto _ : state) {
    BallMesh mesh = build_polar_mesh(HPoint::origin(2), R, 0.1);
    benchmark::DoNotOptimize(mesh.vertices.data());
  }
}
BENCHMARK(BuildPolarMesh)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

static void GaussSeidelSweepCost(benchmark::State& state) {
  // One bounded-sweep solve on shear boundary data; measures per-sweep cost.
  BallMesh mesh = build_polar_mesh(HPoint::origin(2), 3.0, 0.1);
  QuasiIsometricMap f = make_horocyclic_shear(1.0);
  BoundaryData bd;
  bd.target_dim = 2;
  bd.values = evaluate_on_vertices(f, mesh);
  bd.present.assign(bd.values.size(), 0);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.boundary(v)) bd.present[v] = 1;
  SolveOptions opts;
  opts.method = SolveMethod::GaussSeidel;
  opts.max_sweeps = 4;
  opts.initial_guess = DiscreteMap{bd.values, 2};
  for (auto _ : state) {
    auto [sol, rep] = solve_dirichlet(mesh, bd, opts);
    benchmark::DoNotOptimize(sol.values.data());
  }
}
BENCHMARK(GaussSeidelSweepCost)->Unit(benchmark::kMillisecond);

static void NewtonSolve(benchmark::State& state) {
  BallMesh mesh = build_polar_mesh(HPoint::origin(2), 3.0, 0.1);
  QuasiIsometricMap f = make_horocyclic_shear(1.0);
  BoundaryData bd;
  bd.target_dim = 2;
  bd.values = evaluate_on_vertices(f, mesh);
  bd.present.assign(bd.values.size(), 0);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.boundary(v)) bd.present[v] = 1;
  SolveOptions opts;
  opts.initial_guess = DiscreteMap{bd.values, 2};
  for (auto _ : state) {
    auto [sol, rep] = solve_dirichlet(mesh, bd, opts);
    benchmark::DoNotOptimize(rep.sweeps);
  }
}
BENCHMARK(NewtonSolve)->Unit(benchmark::kMillisecond);
