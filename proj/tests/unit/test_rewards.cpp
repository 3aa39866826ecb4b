#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "avcount/io.hpp"
#include "avcount/rewards.hpp"

using namespace avcount;

TEST(GFormat, Examples) {
  EXPECT_EQ(reward_gformat("<think>x</think><answer>y</answer>"), 1);
  EXPECT_EQ(reward_gformat("<answer>y</answer>"), 0);
  EXPECT_EQ(reward_gformat("<think>a</think><answer>b</answer><answer>c</answer>"), 0);
}

TEST(GFormat, WhitespaceAndOrdering) {
  EXPECT_EQ(reward_gformat("\n <think>x</think>\n\n<answer>y</answer>\n"), 1);
  EXPECT_EQ(reward_gformat("<think></think><answer></answer>"), 1);
  EXPECT_EQ(reward_gformat("<answer>y</answer><think>x</think>"), 0);
  EXPECT_EQ(reward_gformat("pre <think>x</think><answer>y</answer>"), 0);
  EXPECT_EQ(reward_gformat("<think>x</think> and <answer>y</answer>"), 0);
  EXPECT_EQ(reward_gformat("<think>x</think><answer>y</answer> post"), 0);
  EXPECT_EQ(reward_gformat("<think><think>x</think><answer>y</answer>"), 0);
}

TEST(JFormat, Examples) {
  const auto pair = ItemRequirement::event_pair();
  EXPECT_DOUBLE_EQ(
      reward_jformat(R"(<think>t</think><answer>[{"start":1,"end":2}]</answer>)", pair), 1.0);
  EXPECT_DOUBLE_EQ(
      reward_jformat(R"(<think>t</think><answer>here: [{"start":1,"end":2}] ok</answer>)", pair),
      0.5);
  EXPECT_DOUBLE_EQ(
      reward_jformat(R"(<think>t</think><answer>[{"start":1,"end":2},{"start":3}]</answer>)", pair),
      0.5);
}

TEST(JFormat, EmptyListIsComplete) {
  EXPECT_DOUBLE_EQ(reward_jformat("<think>t</think><answer>[]</answer>",
                                  ItemRequirement::event_pair()),
                   1.0);
}

TEST(JFormat, NeedsThinkAnswerStructure) {
  EXPECT_DOUBLE_EQ(reward_jformat("<answer>[[1,2]]</answer>", ItemRequirement::event_pair()), 0.0);
  EXPECT_DOUBLE_EQ(reward_jformat("<think>t</think><answer>no json</answer>",
                                  ItemRequirement::event_pair()),
                   0.0);
}

TEST(Acc, Examples) {
  EXPECT_EQ(reward_acc("B", "B"), 1);
  EXPECT_EQ(reward_acc("b ", "B"), 1);
  EXPECT_EQ(reward_acc("A", "B"), 0);
  EXPECT_EQ(reward_acc("  two   dogs", "Two dogs "), 1);
}

TEST(Iou, Examples) {
  EXPECT_DOUBLE_EQ(reward_iou(std::span<const TimeInterval>{}, std::span<const TimeInterval>{}),
                   1.0);
  std::vector<TimeInterval> one{{1, 3}};
  EXPECT_DOUBLE_EQ(reward_iou(std::span<const TimeInterval>(one), std::span<const TimeInterval>(one)),
                   1.0);
  std::vector<TimeInterval> two{{1, 3}, {5, 8}};
  EXPECT_DOUBLE_EQ(reward_iou(std::span<const TimeInterval>(one), std::span<const TimeInterval>(two)),
                   0.5);
  EXPECT_DOUBLE_EQ(reward_iou(std::span<const TimeInterval>(two), std::span<const TimeInterval>(one)),
                   0.5);
  EXPECT_DOUBLE_EQ(reward_iou(std::span<const TimeInterval>(one), std::span<const TimeInterval>{}),
                   0.0);
}

TEST(Iou, SpatialUsesClampedCiou) {
  std::vector<BoundingBox> a{{0, 0, 2, 2}}, far{{40, 0, 42, 2}};
  EXPECT_DOUBLE_EQ(reward_iou(std::span<const BoundingBox>(a), std::span<const BoundingBox>(far)),
                   0.0);
  EXPECT_DOUBLE_EQ(reward_iou(std::span<const BoundingBox>(a), std::span<const BoundingBox>(a)), 1.0);
  std::vector<BoundingBox> shifted{{0, 0, 2, 3}};
  const double r =
      reward_iou(std::span<const BoundingBox>(a), std::span<const BoundingBox>(shifted));
  EXPECT_GT(r, 0.0);
  EXPECT_LT(r, 2.0 / 3.0);
}

TEST(Iou, PermutationInvariant) {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<int> u(0, 12);
  for (int i = 0; i < 500; ++i) {
    std::vector<TimeInterval> p(gen() % 6), g(gen() % 6);
    for (auto& x : p) { const double s = u(gen); x = {s, s + 1 + u(gen) % 4}; }
    for (auto& x : g) { const double s = u(gen); x = {s, s + 1 + u(gen) % 4}; }
    const double base = reward_iou(std::span<const TimeInterval>(p), std::span<const TimeInterval>(g));
    std::shuffle(p.begin(), p.end(), gen);
    std::shuffle(g.begin(), g.end(), gen);
    EXPECT_EQ(reward_iou(std::span<const TimeInterval>(p), std::span<const TimeInterval>(g)), base);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 1.0);

    std::vector<BoundingBox> pb, gb;
    for (const auto& x : p) pb.push_back({x.start_s, x.end_s, x.start_s + 3, x.end_s + 2});
    for (const auto& x : g) gb.push_back({x.start_s, x.end_s, x.start_s + 3, x.end_s + 2});
    const double bb = reward_iou(std::span<const BoundingBox>(pb), std::span<const BoundingBox>(gb));
    std::reverse(pb.begin(), pb.end());
    EXPECT_EQ(reward_iou(std::span<const BoundingBox>(pb), std::span<const BoundingBox>(gb)), bb);
  }
}

TEST(Rmae, Examples) {
  EXPECT_DOUBLE_EQ(reward_rmae(8, 10), 0.8);
  EXPECT_DOUBLE_EQ(reward_rmae(25, 10), 0.0);
  EXPECT_DOUBLE_EQ(reward_rmae(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(reward_rmae(2, 0), 0.0);
  EXPECT_DOUBLE_EQ(reward_rmae(ParseFailure{"no-integer"}, 4), 0.0);
}

TEST(Rmae, IdentityAndMonotone) {
  for (std::int64_t g = 1; g <= 100; ++g) {
    EXPECT_EQ(reward_rmae(g, g), 1.0);
    double prev = 1.0;
    for (std::int64_t d = 0; d <= 2 * g + 2; ++d) {
      const double up = reward_rmae(g + d, g);
      EXPECT_LE(up, prev);
      EXPECT_EQ(up, reward_rmae(g - d, g));
      prev = up;
    }
  }
}

TEST(ComputeReward, Examples) {
  auto perfect = compute_reward(TaskKind::Counting, "<think>count</think><answer>3</answer>",
                                CountTruth{3});
  EXPECT_DOUBLE_EQ(perfect.total, 2.0);

  auto no_think = compute_reward(TaskKind::Counting, "<answer>3</answer>", CountTruth{3});
  EXPECT_EQ(no_think.r_gformat, 0);
  EXPECT_DOUBLE_EQ(no_think.total, 1.0);

  // Prose around the list gives m = 0.5; [0,4] against [0,10] gives IoU 0.4.
  auto grounding = compute_reward(TaskKind::TemporalGrounding,
                                  "<think>look</think><answer>It is [[0, 4]] I think</answer>",
                                  TemporalTruth{{{0, 10}}});
  ASSERT_TRUE(grounding.r_jformat.has_value());
  EXPECT_DOUBLE_EQ(*grounding.r_jformat, 0.5);
  EXPECT_DOUBLE_EQ(grounding.r_task, 0.4);
  EXPECT_DOUBLE_EQ(grounding.total, 0.9);
}

TEST(ComputeReward, QaAndSpatial) {
  auto qa = compute_reward(TaskKind::QA, "<think>x</think><answer> c </answer>", QaTruth{"C"});
  EXPECT_EQ(qa.task_reward_name, "acc");
  EXPECT_DOUBLE_EQ(qa.total, 2.0);
  EXPECT_FALSE(qa.r_jformat.has_value());

  auto sp = compute_reward(TaskKind::SpatialGrounding,
                           "<think>x</think><answer>[[0,0,2,2]]</answer>",
                           SpatialTruth{{{0, 0, 2, 2}}});
  EXPECT_DOUBLE_EQ(sp.total, 2.0);
}

TEST(ComputeReward, WeightsAndMismatch) {
  auto r = compute_reward(TaskKind::Counting, "<think>x</think><answer>8</answer>", CountTruth{10},
                          {0.5, 2.0});
  EXPECT_DOUBLE_EQ(r.total, 0.5 * 1 + 2.0 * 0.8);
  EXPECT_THROW(compute_reward(TaskKind::QA, "x", CountTruth{1}), RewardError);
  EXPECT_THROW(compute_reward(TaskKind::SpatialGrounding, "x", TemporalTruth{}), RewardError);
}

TEST(RewardRequest, JsonRoundTrip) {
  const std::vector<RewardRequest> reqs{
      {"a", TaskKind::QA, "<answer>B</answer>", QaTruth{"B"}},
      {"b", TaskKind::Counting, "7", CountTruth{7}},
      {"c", TaskKind::TemporalGrounding, "t", TemporalTruth{{{0, 1}, {2, 3.5}}}},
      {"d", TaskKind::SpatialGrounding, "s", SpatialTruth{{{0, 0, 1, 1}}}}};
  for (const auto& r : reqs) {
    auto back = reward_request_from_json(nlohmann::json::parse(to_json(r).dump()));
    EXPECT_EQ(back.id, r.id);
    EXPECT_EQ(back.task, r.task);
    EXPECT_EQ(back.text, r.text);
    EXPECT_EQ(to_json(back), to_json(r));
  }
}

TEST(RewardRequest, SchemaErrors) {
  using nlohmann::json;
  EXPECT_THROW(reward_request_from_json(json::parse(R"({"task":"qa","text":"x","gt":{}})")),
               std::exception);
  EXPECT_THROW(
      reward_request_from_json(json::parse(R"({"task":"dance","text":"x","gt":{"answer":"a"}})")),
      SchemaError);
  EXPECT_THROW(reward_request_from_json(
                   json::parse(R"({"task":"counting","text":"x","gt":{"count":1.5}})")),
               SchemaError);
}

TEST(RewardBreakdown, JsonFields) {
  auto j = to_json(compute_reward(TaskKind::TemporalGrounding,
                                  "<think>x</think><answer>[[0,1]]</answer>",
                                  TemporalTruth{{{0, 1}}}));
  EXPECT_EQ(j["task"], "temporal_grounding");
  EXPECT_EQ(j["task_reward"], "iou");
  EXPECT_EQ(j["r_jformat"], 1.0);
  EXPECT_EQ(j["total"], 2.0);
}
