#include <benchmark/benchmark.h>

#include "sbren/dressing.hpp"
#include "sbren/fock.hpp"
#include "sbren/linalg.hpp"
#include "sbren/renorm.hpp"

namespace {

using namespace sbren;

PowerLawGrid grid_of(int modes) { return power_law_grid(0.0, 1.0, 256.0, modes); }

void BM_BuildBasis(benchmark::State& state) {
  const GridPtr g = grid_of(static_cast<int>(state.range(0))).grid;
  for (auto _ : state) benchmark::DoNotOptimize(OccupationBasis::build(g, SpinSpace(2), 3));
  state.SetLabel(std::to_string(OccupationBasis::build(g, SpinSpace(2), 3)->size()) + " states");
}
BENCHMARK(BM_BuildBasis)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_HCorrected(benchmark::State& state) {
  const PowerLawGrid pl = grid_of(static_cast<int>(state.range(0)));
  const BasisPtr b = OccupationBasis::build(pl.grid, SpinSpace(2), 3);
  const FormFactor v = FormFactor::separable(pl.grid, pl.profile, spin::sigma_minus());
  for (auto _ : state) benchmark::DoNotOptimize(renorm::h_corrected(b, spin::sigma_z(), v));
}
BENCHMARK(BM_HCorrected)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ResolventSolve(benchmark::State& state) {
  const PowerLawGrid pl = grid_of(static_cast<int>(state.range(0)));
  const BasisPtr b = OccupationBasis::build(pl.grid, SpinSpace(2), 3);
  const FormFactor v = FormFactor::separable(pl.grid, pl.profile, spin::sigma_x());
  const Operator h = renorm::h_corrected(b, spin::sigma_z(), v);
  for (auto _ : state) {
    const ResolventSolver solver(h, cplx(0.0, -1.0));
    benchmark::DoNotOptimize(solver.solve(random_matrix(h.dim(), 4, 1)));
  }
  state.SetLabel(std::to_string(h.dim()) + " states");
}
BENCHMARK(BM_ResolventSolve)->Arg(8)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_OperatorNorm(benchmark::State& state) {
  const PowerLawGrid pl = grid_of(16);
  const BasisPtr b = OccupationBasis::build(pl.grid, SpinSpace(2), 3);
  const FormFactor v = FormFactor::separable(pl.grid, pl.profile, spin::sigma_minus());
  const Operator h = renorm::h_corrected(b, spin::sigma_z(), v);
  const Operator hc = renorm::h_corrected(b, spin::sigma_z(), cutoff_ultraviolet(v, 16.0));
  const ResolventSolver r(h, cplx(0.0, -1.0)), rc(hc, cplx(0.0, -1.0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_norm(r.as_map() - rc.as_map()));
}
BENCHMARK(BM_OperatorNorm)->Unit(benchmark::kMillisecond);

void BM_WeylOperator(benchmark::State& state) {
  const PowerLawGrid pl = power_law_grid(0.0, 0.5, 4.0, 2);
  const BasisPtr b = OccupationBasis::build(pl.grid, SpinSpace(2), static_cast<int>(state.range(0)));
  const FormFactor f = FormFactor::separable(pl.grid, pl.profile, spin::sigma_x()) * cplx(0.3);
  for (auto _ : state) benchmark::DoNotOptimize(dressing::weyl_operator(b, f));
  state.SetLabel(std::to_string(b->size()) + " states");
}
BENCHMARK(BM_WeylOperator)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_GroundEnergy(benchmark::State& state) {
  const PowerLawGrid pl = grid_of(static_cast<int>(state.range(0)));
  const BasisPtr b = OccupationBasis::build(pl.grid, SpinSpace(2), 3);
  const FormFactor v = FormFactor::separable(pl.grid, pl.profile, spin::sigma_x());
  const Operator h = renorm::h_corrected(b, spin::sigma_z(), v);
  for (auto _ : state) benchmark::DoNotOptimize(ground_energy(h));
  state.SetLabel(std::to_string(h.dim()) + " states");
}
BENCHMARK(BM_GroundEnergy)->Arg(8)->Arg(24)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
