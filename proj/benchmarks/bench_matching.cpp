#include <benchmark/benchmark.h>

#include <cmath>

#include "avcount/geometry.hpp"
#include "avcount/rng.hpp"

using namespace avcount;

namespace {

std::vector<BoundingBox> random_boxes(Rng& rng, std::size_t n) {
  std::vector<BoundingBox> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform_real(0, 500);
    const double y = rng.uniform_real(0, 500);
    out.push_back({x, y, x + rng.uniform_real(5, 60), y + rng.uniform_real(5, 60)});
  }
  return out;
}

void BM_GreedyMatch(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto preds = random_boxes(rng, n);
  const auto gts = random_boxes(rng, n);
  const auto m = ScoreMatrix::build(std::span<const BoundingBox>(preds),
                                    std::span<const BoundingBox>(gts), box_iou);
  for (auto _ : state) benchmark::DoNotOptimize(greedy_match(m));
  state.SetComplexityN(state.range(0));
}
// Every pair is sorted once, so cost grows as N^2 log N.
BENCHMARK(BM_GreedyMatch)
    ->RangeMultiplier(4)
    ->Range(4, 256)
    ->Complexity([](benchmark::IterationCount n) {
      const auto d = static_cast<double>(n);
      return d * d * std::log2(d);
    });

void BM_BuildAndMatch(benchmark::State& state) {
  Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto preds = random_boxes(rng, n);
  const auto gts = random_boxes(rng, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(greedy_match(std::span<const BoundingBox>(preds),
                                          std::span<const BoundingBox>(gts), box_iou));
  }
}
BENCHMARK(BM_BuildAndMatch)->Arg(8)->Arg(76);

void BM_BruteForce(benchmark::State& state) {
  Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto preds = random_boxes(rng, n);
  const auto gts = random_boxes(rng, n);
  const auto m = ScoreMatrix::build(std::span<const BoundingBox>(preds),
                                    std::span<const BoundingBox>(gts), box_iou);
  for (auto _ : state) benchmark::DoNotOptimize(optimal_match_bruteforce(m));
}
BENCHMARK(BM_BruteForce)->DenseRange(2, 7);

}  // namespace
