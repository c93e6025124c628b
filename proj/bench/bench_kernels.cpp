#include <benchmark/benchmark.h>

#include "aggshock/reference.hpp"

#include <random>

using namespace aggshock;

namespace {

DgpSpec spec4() {
  DgpSpec s = synthetic_spec(51, 39, 7);
  s.design = design_flags(4);
  return s;
}

McOptions mc(int threads) {
  McOptions o;
  o.reps = 64;
  o.seed = 1;
  o.threads = threads;
  return o;
}

struct ExposureInput {
  BalancedPanel panel;
  Vector Z;
  Matrix Psi;
};

ExposureInput exposure_input(Index n, Index T) {
  std::mt19937_64 g(3);
  std::normal_distribution<double> N;
  ExposureInput in;
  in.Z = Vector::NullaryExpr(T, [&] { return N(g); });
  in.panel.W = Matrix::NullaryExpr(n, T, [&] { return N(g); });
  in.panel.Y = in.panel.W;
  in.Psi = Matrix::Ones(T, 1);
  return in;
}

const Eigen::Matrix2d sigma = (Eigen::Matrix2d() << 0.3, -0.1, -0.1, 0.2).finished();
const GridSpec grid{-40.0, 40.0, 200001};

}  // namespace

static void BM_replications_reference(benchmark::State& st) {
  const DgpSpec s = spec4();
  for (auto _ : st) benchmark::DoNotOptimize(reference::simulate_replications(s, mc(1)));
}
BENCHMARK(BM_replications_reference)->Unit(benchmark::kMillisecond);

static void BM_replications(benchmark::State& st) {
  const DgpSpec s = spec4();
  for (auto _ : st) benchmark::DoNotOptimize(simulate_replications(s, mc(static_cast<int>(st.range(0)))));
}
BENCHMARK(BM_replications)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_confidence_set_reference(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(reference::confidence_set(0.2, 0.3, sigma, 0.05, grid));
}
BENCHMARK(BM_confidence_set_reference)->Unit(benchmark::kMillisecond);

static void BM_confidence_set(benchmark::State& st) {
  for (auto _ : st)
    benchmark::DoNotOptimize(confidence_set(0.2, 0.3, sigma, 0.05, grid, static_cast<int>(st.range(0))));
}
BENCHMARK(BM_confidence_set)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_exposures_reference(benchmark::State& st) {
  const ExposureInput in = exposure_input(2000, 60);
  for (auto _ : st) benchmark::DoNotOptimize(reference::construct_exposures(in.panel, in.Z, in.Psi, 30));
}
BENCHMARK(BM_exposures_reference)->Unit(benchmark::kMillisecond);

static void BM_exposures(benchmark::State& st) {
  const ExposureInput in = exposure_input(2000, 60);
  for (auto _ : st)
    benchmark::DoNotOptimize(construct_exposures(in.panel, in.Z, in.Psi, 30, static_cast<int>(st.range(0))));
}
BENCHMARK(BM_exposures)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
