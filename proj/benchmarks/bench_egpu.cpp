#include <benchmark/benchmark.h>

#include "egpu/fftgen.hpp"
#include "egpu/oracle.hpp"

using namespace egpu;

namespace {

void plan_args(benchmark::internal::Benchmark* b) {
  for (auto [radix, points] : {std::pair{4, 256}, {4, 4096}, {8, 512}, {8, 4096}, {16, 1024}, {16, 4096}})
    b->Args({radix, points});
}

void BM_EmitProgram(benchmark::State& state) {
  auto p = plan(static_cast<int>(state.range(1)), static_cast<int>(state.range(0)));
  auto cfg = plan_config(p, Variant::DP_VM_COMPLEX);
  for (auto _ : state) benchmark::DoNotOptimize(emit_program(p, cfg));
}
BENCHMARK(BM_EmitProgram)->Apply(plan_args)->Unit(benchmark::kMicrosecond);

void BM_Run(benchmark::State& state) {
  const int points = static_cast<int>(state.range(1));
  auto p = plan(points, static_cast<int>(state.range(0)));
  auto cfg = plan_config(p, Variant::DP_VM_COMPLEX);
  auto c = emit_program(p, cfg);
  auto mem = init_memory(p, oracle::random_vector(points, 1));
  for (auto _ : state) benchmark::DoNotOptimize(run(c.program, cfg, mem));
  state.SetItemsProcessed(state.iterations() * points);
}
BENCHMARK(BM_Run)->Apply(plan_args)->Unit(benchmark::kMicrosecond);

void BM_VmEligibility(benchmark::State& state) {
  auto p = plan(static_cast<int>(state.range(1)), static_cast<int>(state.range(0)));
  for (auto _ : state)
    for (int i = 0; i < static_cast<int>(p.passes.size()); ++i) benchmark::DoNotOptimize(vm_eligibility(p, i));
}
BENCHMARK(BM_VmEligibility)->Apply(plan_args)->Unit(benchmark::kMicrosecond);

void BM_DftReference(benchmark::State& state) {
  auto x = oracle::random_vector(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(oracle::dft_reference(x));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DftReference)->RangeMultiplier(4)->Range(256, 4096)->Complexity(benchmark::oNSquared)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
