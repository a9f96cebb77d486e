#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "delaydense/asymptotics.hpp"
#include "delaydense/density.hpp"
#include "delaydense/ergostats.hpp"
#include "delaydense/rng.hpp"
#include "delaydense/transient.hpp"

using namespace delaydense;

namespace {

DelaySystem mackey_glass() {
  return make_system(ModelId::MackeyGlass, {{"alpha", 1 / 0.1625}, {"beta", 12 / 0.1625}, {"n", 10}});
}

void BM_TimeOneMap(benchmark::State& state) {
  auto sys = mackey_glass();
  auto x = initial_history(InitialFamily::linear(0.48, -0.6), static_cast<int>(state.range(0)));
  std::vector<double> values(x.values().begin(), x.values().end()), scratch;
  for (auto _ : state) {
    time_one_map_inplace(sys, values, scratch);
    benchmark::DoNotOptimize(values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TimeOneMap)->Arg(256)->Arg(1024);

void BM_Ensemble(benchmark::State& state) {
  auto sys = make_system(ModelId::MackeyGlass, {{"alpha", 2}, {"beta", 4}, {"n", 10}});
  auto rho = Density1D::uniform(0.3, 1.3, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(ensemble_values(sys, rho, FamilyKind::constant(), 3, state.range(0), 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ensemble)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_PlPushForward(benchmark::State& state) {
  auto sys = make_system(ModelId::MackeyGlass, {{"alpha", 2}, {"beta", 4}, {"n", 10}});
  auto rho = Density1D::uniform(0.3, 1.3, 100);
  auto map = build_pl_map(sys, FamilyKind::constant(), uniform_edges(0.3, 1.3, 999), 3);
  auto grid = uniform_edges(0, 1.5, 1000);
  for (auto _ : state) benchmark::DoNotOptimize(apply_pl_pf(map, rho, grid));
}
BENCHMARK(BM_PlPushForward);

void BM_ScpfApply(benchmark::State& state) {
  auto op = ScpfOperator::build(scpf_feedback(make_system(ModelId::TentFeedback, {{"epsilon", 0.3}})), 0.05, -1.0,
                                1.2, static_cast<std::size_t>(state.range(0)));
  std::vector<double> u(op.size(), 1.0);
  auto d = op.make_density(u).normalize();
  for (auto _ : state) benchmark::DoNotOptimize(op.apply(d));
}
BENCHMARK(BM_ScpfApply)->Arg(513)->Arg(2049);

void BM_EscapeTime(benchmark::State& state) {
  auto sys = mackey_glass();
  auto ts = discover_templates(sys, FamilyId::Linear, Rect{-1.5, 1.5, -4, 4}, 8);
  auto region = region_from_templates(ts, 0.2);
  auto x = initial_history(InitialFamily::linear(0.481970773688, -0.6));
  for (auto _ : state) benchmark::DoNotOptimize(escape_time(sys, x, region, 200));
}
BENCHMARK(BM_EscapeTime)->Unit(benchmark::kMillisecond);

void BM_CorrelationDimension(benchmark::State& state) {
  CounterRng rng(3, 0);
  PointCloud cloud{2, {}};
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(state.range(0)); ++i) {
    double th = 2 * std::numbers::pi * rng.uniform(i);
    cloud.push(std::vector<double>{std::cos(th), std::sin(th)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(correlation_dimension(cloud, 1e-3, 2, 30));
}
BENCHMARK(BM_CorrelationDimension)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
