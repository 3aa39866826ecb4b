#include <benchmark/benchmark.h>

#include "avcount/extract.hpp"

using namespace avcount;

namespace {

void BM_RecoverStrict(benchmark::State& state) {
  const std::string text = R"({"Frame1":[[0,0,10,10],[20,20,30,30]],"Frame2":[[5,5,9,9]]})";
  for (auto _ : state) benchmark::DoNotOptimize(recover_json(text));
}
BENCHMARK(BM_RecoverStrict);

void BM_RecoverFromProse(benchmark::State& state) {
  const std::string text =
      "Sure, here are the boxes I found [see below]: {\"Frame1\":[[0,0,10,10]]} hope it helps";
  for (auto _ : state) benchmark::DoNotOptimize(recover_json(text));
}
BENCHMARK(BM_RecoverFromProse);

void BM_RecoverUnbalanced(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < state.range(0); ++i) text += "[x {y ";
  for (auto _ : state) benchmark::DoNotOptimize(recover_json(text));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RecoverUnbalanced)->RangeMultiplier(4)->Range(4, 1024)->Complexity();

}  // namespace
