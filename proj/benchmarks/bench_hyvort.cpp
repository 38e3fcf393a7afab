#include <benchmark/benchmark.h>

#include "hyvort/bpx.hpp"
#include "hyvort/experiment.hpp"
#include "hyvort/filament3d.hpp"
#include "hyvort/harmonic.hpp"
#include "hyvort/nls_ref.hpp"
#include "hyvort/schrodingerize.hpp"

using namespace hyvort;

namespace {

VortexConfig pair() { return VortexConfig{{Vec2(0.35, 0.55), Vec2(0.70, 0.40)}, 0.0}; }

void BM_BpxPcg2D(benchmark::State& state) {
  const int level = static_cast<int>(state.range(0));
  const Grid2D grid(level);
  const auto K = assemble_laplacian(grid, Scaling::Stiffness);
  const auto bpx = build_bpx(2, level);
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(grid.interior_count());
  int iters = 0;
  for (auto _ : state) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    iters = bpx_pcg(K.matrix, *bpx, b, x, 1e-10).iterations;
    benchmark::DoNotOptimize(x.data());
  }
  state.counters["iterations"] = iters;
}
BENCHMARK(BM_BpxPcg2D)->DenseRange(5, 8)->Unit(benchmark::kMillisecond);

void BM_HarmonicSolve(benchmark::State& state) {
  const Grid2D grid(static_cast<int>(state.range(0)));
  const auto kind = static_cast<SolverKind>(state.range(1));
  const HarmonicSolver solver(grid, kind);
  const auto phi = deg2_boundary_phase(grid);
  const auto a = pair();
  for (auto _ : state) benchmark::DoNotOptimize(solve_harmonic(a, phi, solver));
}
BENCHMARK(BM_HarmonicSolve)
    ->Args({6, static_cast<int>(SolverKind::DirectSparse)})
    ->Args({6, static_cast<int>(SolverKind::BPX_CG)})
    ->Args({8, static_cast<int>(SolverKind::DirectSparse)})
    ->Args({8, static_cast<int>(SolverKind::BPX_CG)})
    ->Unit(benchmark::kMillisecond);

void BM_EmulatorSolve(benchmark::State& state) {
  const Grid2D grid(static_cast<int>(state.range(0)));
  EmulatorOptions opt;
  opt.eps = 1e-6;
  const SchrodingerSolver solver(grid, opt);
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(grid.interior_count());
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(b));
  state.counters["Np"] = solver.reg().Np;
}
BENCHMARK(BM_EmulatorSolve)->Arg(3)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_StrangStep(benchmark::State& state) {
  NLSParams p;
  p.eps = 0.05;
  p.level = static_cast<int>(state.range(0));
  p.initial = pair();
  auto u = initial_data(p);
  const LinearPropagator lin(Grid2D(p.level), 1e-5, 1.0, 1e-12, 500);
  for (auto _ : state) strang_step(u, lin, p.eps);
}
BENCHMARK(BM_StrangStep)->Arg(6)->Arg(7)->Unit(benchmark::kMillisecond);

void BM_LondonSolve(benchmark::State& state) {
  const Grid3D grid(static_cast<int>(state.range(0)));
  const auto ring = make_circle(Vec3(0.5, 0.5, 0.5), 0.25, 128);
  for (auto _ : state) benchmark::DoNotOptimize(solve_london(ring, grid, 1e-10));
}
BENCHMARK(BM_LondonSolve)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_GreenSuperposition(benchmark::State& state) {
  const auto ring = make_circle(Vec3(0.5, 0.5, 0.5), 0.25, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(green_superposition(ring, Vec3(0.6, 0.5, 0.5)));
}
BENCHMARK(BM_GreenSuperposition)->Arg(128)->Arg(1024);

void BM_ReducedM2(benchmark::State& state) {
  ExperimentConfig c;
  c.level = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_m2(c));
}
BENCHMARK(BM_ReducedM2)->Arg(5)->Arg(6)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
