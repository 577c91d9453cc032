#include <random>

#include <benchmark/benchmark.h>

#include "qdw/detection.hpp"
#include "qdw/experiments.hpp"
#include "qdw/liouvillian.hpp"
#include "qdw/master_equation.hpp"
#include "qdw/trajectories.hpp"

namespace {

using namespace qdw;

SystemParams busy_params() {
  SystemParams p;
  p.gamma_sf = 0.01;
  p.delta_drive = 0.3;
  return p;
}

void BM_LiouvillianApply(benchmark::State& state) {
  const Liouvillian L(busy_params());
  OperatorMatrix x = DensityMatrix::mixed_ground().matrix();
  x(1, 3) = x(3, 1) = 0.1;
  for (auto _ : state) {
    x = 0.5 * (x + L.apply(x, {3.0, 0.5}) * 1e-3);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_LiouvillianApply);

void BM_DenseLindbladRhs(benchmark::State& state) {
  const SystemParams p = busy_params();
  const OperatorMatrix h = build_hamiltonian(p, {3.0, 0.5});
  const auto ops = build_collapse_ops(p);
  OperatorMatrix x = DensityMatrix::mixed_ground().matrix();
  for (auto _ : state) {
    x = 0.5 * (x + lindblad_rhs(x, h, ops) * 1e-3);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_DenseLindbladRhs);

// One repetition of the default W3 sequence with finite pulses: 6250 RK4 steps.
void BM_MasterEquationRepetition(benchmark::State& state) {
  ExperimentSpec spec;
  const PulseSequence seq = wstate_sequence(spec, Scheme::Weak);
  const TimeGrid grid{0.0, seq.rep_period, 0.002};
  for (auto _ : state) {
    benchmark::DoNotOptimize(evolve_master(DensityMatrix::mixed_ground(), seq, spec.params, grid));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.steps()));
}
BENCHMARK(BM_MasterEquationRepetition)->Unit(benchmark::kMillisecond);

void BM_Trajectories(benchmark::State& state) {
  ExperimentSpec spec;
  spec.sim.delta_pulses = state.range(0) != 0;
  const PulseSequence seq = wstate_sequence(spec, Scheme::Weak);
  TrajectoryOptions opt;
  opt.n_reps = 12;
  opt.delta_pulses = spec.sim.delta_pulses;
  const std::size_t n = 1000;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_trajectories(DensityMatrix::mixed_ground(), seq, spec.params, n, ++seed, opt));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Trajectories)->Arg(0)->Arg(1)->ArgNames({"delta"})->Unit(benchmark::kMillisecond);

void BM_HbtCorrelate(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::exponential_distribution<double> gap(0.1);
  std::vector<ClickRecord> recs;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    ClickRecord r{i, 0, 150.0, {}};
    for (double t = gap(rng); t < 150.0; t += gap(rng)) r.clicks.push_back({t, Channel::Enhanced});
    recs.push_back(std::move(r));
  }
  for (auto _ : state) benchmark::DoNotOptimize(hbt_correlate(recs, 137.5, 0.125, 3));
}
BENCHMARK(BM_HbtCorrelate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
