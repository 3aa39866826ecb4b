#include <benchmark/benchmark.h>

#include "avcount/rewards.hpp"

using namespace avcount;

namespace {

void BM_CountingReward(benchmark::State& state) {
  const std::string text = "<think>three barks then two more</think><answer>5</answer>";
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_reward(TaskKind::Counting, text, CountTruth{6}));
  }
}
BENCHMARK(BM_CountingReward);

void BM_TemporalReward(benchmark::State& state) {
  const std::string text =
      "<think>scan the clip</think><answer>[{\"start\":1.5,\"end\":4.0},"
      "{\"start\":10,\"end\":12.5},{\"start\":20,\"end\":22}]</answer>";
  const TemporalTruth gt{{{1, 4}, {10, 13}, {30, 31}}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_reward(TaskKind::TemporalGrounding, text, gt));
  }
}
BENCHMARK(BM_TemporalReward);

void BM_SpatialReward(benchmark::State& state) {
  const std::string text =
      "<think>look</think><answer>[[0,0,10,10],[20,20,35,35],[50,50,60,70]]</answer>";
  const SpatialTruth gt{{{0, 0, 9, 9}, {22, 22, 35, 35}}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_reward(TaskKind::SpatialGrounding, text, gt));
  }
}
BENCHMARK(BM_SpatialReward);

}  // namespace
