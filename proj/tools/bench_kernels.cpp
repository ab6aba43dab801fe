// Serial reference vs OpenMP kernels on the suspension saddle.

#include <benchmark/benchmark.h>

#include "singflow/kernels.hpp"

using namespace singflow;

namespace {

const Field& bench_field() {
  static const Field f = Field::suspension_saddle();
  return f;
}

void BM_TransitionData(benchmark::State& state) {
  const Exec exec = state.range(0) ? Exec::parallel : Exec::serial;
  const BoxCover cover = build_box_cover(bench_field().region(), 1.0 / static_cast<double>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(compute_transition_data(bench_field(), cover, {}, exec));
  state.counters["boxes"] = static_cast<double>(cover.box_count());
}

void BM_EnumerateEdges(benchmark::State& state) {
  const Exec exec = state.range(0) ? Exec::parallel : Exec::serial;
  const BoxCover cover = build_box_cover(bench_field().region(), 1.0 / static_cast<double>(state.range(1)));
  const TransitionData data = compute_transition_data(bench_field(), cover);
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_edges(data, 0.2, 100'000'000, exec));
  state.counters["boxes"] = static_cast<double>(cover.box_count());
}

}  // namespace

// Args: {parallel, boxes per unit length}
BENCHMARK(BM_TransitionData)->ArgsProduct({{0, 1}, {4, 8}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnumerateEdges)->ArgsProduct({{0, 1}, {4, 8}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
