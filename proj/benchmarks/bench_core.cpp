#include <benchmark/benchmark.h>

#include "lmcf/density.hpp"
#include "lmcf/flow.hpp"
#include "lmcf/presets.hpp"

using namespace lmcf;

namespace {

ImmersedCurve figure_eight(int n) {
  CurveSpec s;
  s.preset = CurvePreset::kFigureEight;
  s.vertices = n;
  return make_curve(s);
}

const AmbientSpace& drift_space() {
  static const AmbientSpace sp(1, HolomorphicPolynomial::parse(1, "1:0.3,0;2:0.05,0.02"));
  return sp;
}

void BM_Frame(benchmark::State& state) {
  const ImmersedCurve c = figure_eight(static_cast<int>(state.range(0)));
  FrameData f;
  for (auto _ : state) {
    compute_frame(c, drift_space(), f);
    benchmark::DoNotOptimize(f.theta.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Frame)->RangeMultiplier(4)->Range(256, 4096);

void BM_Step(benchmark::State& state) {
  ImmersedCurve c = figure_eight(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(step(c, drift_space(), 1e-7));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Step)->RangeMultiplier(4)->Range(256, 4096);

void BM_Redistribute(benchmark::State& state) {
  const ImmersedCurve c = figure_eight(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(redistribute(c));
}
BENCHMARK(BM_Redistribute)->RangeMultiplier(4)->Range(256, 4096);

void BM_BudgetSample(benchmark::State& state) {
  const ImmersedCurve c = figure_eight(static_cast<int>(state.range(0)));
  const FrameData f = compute_frame(c, drift_space());
  DensityProbe p;
  p.t0 = 0.3;
  p.r = 0.6;
  p.f = WeightKind::kThetaSquared;
  for (auto _ : state) benchmark::DoNotOptimize(budget_sample(c, f, drift_space(), p));
}
BENCHMARK(BM_BudgetSample)->RangeMultiplier(4)->Range(256, 4096);

}  // namespace

BENCHMARK_MAIN();
