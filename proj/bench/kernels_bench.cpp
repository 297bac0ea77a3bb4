#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "lrtc/experiments.hpp"
#include "lrtc/solver.hpp"
#include "lrtc/tensor.hpp"

using namespace lrtc;

namespace {

Execution execution_arg(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

Shape cube(std::int64_t side) {
  return {static_cast<std::size_t>(side), static_cast<std::size_t>(side), 3};
}

void BM_Unfold(benchmark::State& state) {
  const Execution exec = execution_arg(state);
  const DenseTensor t = synthetic_lowrank(cube(state.range(1)), {4, 4, 2}, 1);
  for (auto _ : state) {
    for (std::size_t n = 0; n < t.order(); ++n) benchmark::DoNotOptimize(unfold(t, n, exec));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(t.size() * t.order() * sizeof(double)));
}

void BM_Fold(benchmark::State& state) {
  const Execution exec = execution_arg(state);
  const DenseTensor t = synthetic_lowrank(cube(state.range(1)), {4, 4, 2}, 2);
  std::vector<Matrix> unfolded;
  for (std::size_t n = 0; n < t.order(); ++n) unfolded.push_back(unfold(t, n));
  for (auto _ : state) {
    for (std::size_t n = 0; n < t.order(); ++n) benchmark::DoNotOptimize(fold(unfolded[n], n, t.shape(), exec));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(t.size() * t.order() * sizeof(double)));
}

void BM_Step(benchmark::State& state) {
  const Shape shape = cube(state.range(1));
  const DenseTensor truth = synthetic_lowrank(shape, {4, 4, 2}, 3);
  const ObservationMask mask = generate_mask(shape, 0.4, 4);
  const DenseTensor observed = apply_mask(truth, mask);
  SolverConfig cfg;
  cfg.execution = execution_arg(state);
  SolverState s = init_state(observed, mask, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(step(s, observed, mask, cfg));
}

void BM_Sweep(benchmark::State& state) {
  ExperimentSpec spec;
  spec.instance = SyntheticInstance{{20, 20, 5}, {2, 2, 2}, 0.0};
  spec.ratios = {0.3, 0.5};
  spec.repeats = 2;
  spec.execution = execution_arg(state);
  SolverConfig cfg;
  cfg.t_max = 50;
  cfg.execution = spec.execution;
  SolverConfig fixed = SolverConfig::fixed_penalty();
  fixed.t_max = 50;
  fixed.execution = spec.execution;
  spec.configs = {NamedConfig{"proposed", cfg, std::nullopt}, NamedConfig{"fixed", fixed, std::nullopt}};
  for (auto _ : state) benchmark::DoNotOptimize(run_sweep(spec));
}

}  // namespace

BENCHMARK(BM_Unfold)->ArgNames({"parallel", "side"})->ArgsProduct({{0, 1}, {64, 256}});
BENCHMARK(BM_Fold)->ArgNames({"parallel", "side"})->ArgsProduct({{0, 1}, {64, 256}});
BENCHMARK(BM_Step)->ArgNames({"parallel", "side"})->ArgsProduct({{0, 1}, {64}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep)->ArgNames({"parallel"})->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
