#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "avcount/blackbox.hpp"
#include "avcount/whitebox.hpp"

using namespace avcount;

namespace {

MatchResult pairs_with(std::vector<double> scores) {
  MatchResult m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    m.pairs.push_back({i, i, scores[i]});
    m.total_iou += scores[i];
  }
  return m;
}

ObjectBoxes object_boxes(std::vector<std::pair<std::string, BoundingBox>> items) {
  ObjectBoxes o;
  for (auto& [frame, box] : items) o.by_frame[frame].push_back(box);
  return o;
}

AttributeBoxes attribute_boxes(std::vector<std::tuple<std::string, BoundingBox, std::string>> items) {
  AttributeBoxes a;
  for (auto& [frame, box, label] : items) a.by_frame[frame].push_back({box, label});
  return a;
}

}  // namespace

TEST(LocalizationAccuracy, Examples) {
  EXPECT_DOUBLE_EQ(localization_accuracy(pairs_with({1.0, 1.0}), 2), 1.0);
  EXPECT_DOUBLE_EQ(localization_accuracy(pairs_with({1.0}), 2), 0.5);
  EXPECT_DOUBLE_EQ(localization_accuracy(pairs_with({0.6, 0.4}), 2), 0.5);
  EXPECT_THROW(localization_accuracy(pairs_with({}), 0), std::invalid_argument);
}

TEST(CountingPenalty, Examples) {
  EXPECT_DOUBLE_EQ(counting_penalty(4, 4), 1.0);
  EXPECT_DOUBLE_EQ(counting_penalty(3, 4), 0.75);
  EXPECT_DOUBLE_EQ(counting_penalty(9, 4), 0.0);
  EXPECT_DOUBLE_EQ(counting_penalty(0, 4), 0.0);
  EXPECT_THROW(counting_penalty(1, 0), std::invalid_argument);
}

TEST(ScoreEvent, Examples) {
  EventClues gt{{{2, 4}, {7, 9}}};
  EXPECT_DOUBLE_EQ(score_event(EventSegments{gt.intervals}, gt).wcs, 100.0);

  auto half = score_event(EventSegments{{{2, 4}}}, gt);
  ASSERT_EQ(half.per_cluster.size(), 1u);
  EXPECT_DOUBLE_EQ(half.per_cluster[0].la, 0.5);
  EXPECT_DOUBLE_EQ(half.per_cluster[0].cap, 0.5);
  EXPECT_DOUBLE_EQ(half.wcs, 50.0);

  auto bad = score_event(ParseFailure{"format"}, gt);
  EXPECT_FALSE(bad.format_ok);
  EXPECT_EQ(bad.wcs, 0.0);
  EXPECT_TRUE(bad.per_cluster.empty());
}

TEST(ScoreObject, Examples) {
  ObjectClues gt{{{"Frame1", {0, 0, 10, 10}}, {"Frame2", {0, 0, 10, 10}}, {"Frame3", {5, 5, 9, 9}}}};
  auto exact = object_boxes(
      {{"1", {0, 0, 10, 10}}, {"2", {0, 0, 10, 10}}, {"3", {5, 5, 9, 9}}});
  EXPECT_DOUBLE_EQ(score_object(exact, gt).wcs, 100.0);

  ObjectClues single{{{"Frame1", {0, 0, 10, 10}}}};
  auto wrong_frame = score_object(object_boxes({{"2", {0, 0, 10, 10}}}), single);
  EXPECT_DOUBLE_EQ(wrong_frame.per_cluster[0].la, 0.0);
  EXPECT_DOUBLE_EQ(wrong_frame.wcs, 0.0);

  // IoU 1.0 on Frame1, IoU 0.5 on Frame2, Frame3 missed.
  auto partial = score_object(object_boxes({{"1", {0, 0, 10, 10}}, {"2", {0, 0, 10, 5}}}), gt);
  EXPECT_DOUBLE_EQ(partial.per_cluster[0].la, 0.5);
  EXPECT_DOUBLE_EQ(partial.per_cluster[0].cap, 2.0 / 3.0);
  EXPECT_NEAR(partial.wcs, 100.0 * std::sqrt(1.0 / 3.0), 1e-12);
  EXPECT_NEAR(partial.wcs, 57.74, 5e-3);
}

TEST(ScoreAttribute, Examples) {
  AttributeClues gt{{{"red", {{"Frame1", {0, 0, 10, 10}}, {"Frame2", {20, 20, 30, 30}}}},
                     {"blue", {{"Frame1", {50, 50, 60, 60}}}}}};
  auto exact = attribute_boxes({{"1", {0, 0, 10, 10}, "r"},
                                {"2", {20, 20, 30, 30}, "r"},
                                {"1", {50, 50, 60, 60}, "b"}});
  EXPECT_DOUBLE_EQ(score_attribute(exact, gt).wcs, 100.0);

  AttributeClues two{{{"red", {{"Frame1", {0, 0, 10, 10}}}}, {"blue", {{"Frame1", {50, 50, 60, 60}}}}}};
  auto only_red = score_attribute(attribute_boxes({{"1", {0, 0, 10, 10}, "x"}}), two);
  EXPECT_DOUBLE_EQ(only_red.wcs, 50.0);
  const auto& blue = only_red.per_cluster[0];
  EXPECT_EQ(blue.label, "blue");
  EXPECT_EQ(blue.la, 0.0);
  EXPECT_EQ(blue.cap, 0.0);
  EXPECT_TRUE(blue.matched_label.empty());
}

TEST(ScoreAttribute, MixedPartialCase) {
  AttributeClues gt{{{"red", {{"Frame1", {0, 0, 10, 10}}, {"Frame2", {20, 20, 30, 30}}}},
                     {"blue", {{"Frame1", {50, 50, 60, 60}}}}}};
  // red: IoUs 0.5 and 1.0 plus one stray box -> la 0.75, cap 0.5.
  // blue: IoU 0.5 -> la 0.5, cap 1.
  auto pred = attribute_boxes({{"1", {0, 0, 10, 5}, "r"},
                               {"2", {20, 20, 30, 30}, "r"},
                               {"2", {40, 40, 45, 45}, "r"},
                               {"1", {50, 50, 60, 55}, "b"}});
  auto r = score_attribute(pred, gt);
  const double expected = 100.0 * (std::sqrt(0.75 * 0.5) + std::sqrt(0.5)) / 2.0;
  EXPECT_NEAR(r.wcs, expected, 1e-12);
  EXPECT_EQ(r.per_cluster[1].matched_label, "r");
  EXPECT_EQ(r.per_cluster[0].matched_label, "b");
}

TEST(ScoreAttribute, ExtraPredictedClustersNotAveraged) {
  AttributeClues gt{{{"red", {{"Frame1", {0, 0, 10, 10}}}}}};
  auto r = score_attribute(
      attribute_boxes({{"1", {0, 0, 10, 10}, "r"}, {"1", {70, 70, 80, 80}, "extra"}}), gt);
  EXPECT_EQ(r.per_cluster.size(), 1u);
  EXPECT_DOUBLE_EQ(r.wcs, 100.0);
}

TEST(Whitebox, SingleClusterIdentity) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0, 50);
  for (int i = 0; i < 300; ++i) {
    EventClues gt;
    EventSegments pred;
    for (std::size_t k = 1 + gen() % 5; k > 0; --k) {
      const double s = u(gen);
      gt.intervals.push_back({s, s + 1 + u(gen) / 10});
    }
    for (std::size_t k = gen() % 7; k > 0; --k) {
      const double s = u(gen);
      pred.segments.push_back({s, s + 1 + u(gen) / 10});
    }
    auto r = score_event(pred, gt);
    const auto& c = r.per_cluster.at(0);
    EXPECT_NEAR(r.wcs * r.wcs / 10000.0, c.la * c.cap, 1e-12);
    EXPECT_GE(r.wcs, 0.0);
    EXPECT_LE(r.wcs, 100.0);
  }
}

TEST(Whitebox, ReorderingPredictionsDoesNotChangeScore) {
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> u(0, 20);
  for (int i = 0; i < 300; ++i) {
    ObjectClues gt;
    for (int k = 0; k < 3; ++k) {
      const double x = u(gen), y = u(gen);
      gt.first_appearances.push_back({"Frame" + std::to_string(k % 2), {x, y, x + 5, y + 5}});
    }
    std::vector<std::pair<std::string, BoundingBox>> items;
    for (std::size_t k = gen() % 6; k > 0; --k) {
      const double x = u(gen), y = u(gen);
      items.push_back({std::to_string(gen() % 2), {x, y, x + 5, y + 5}});
    }
    const double base = score_object(object_boxes(items), gt).wcs;
    std::shuffle(items.begin(), items.end(), gen);
    EXPECT_EQ(score_object(object_boxes(items), gt).wcs, base);
    auto clues = gt;
    std::reverse(clues.first_appearances.begin(), clues.first_appearances.end());
    EXPECT_EQ(score_object(object_boxes(items), clues).wcs, base);
  }
}

TEST(Whitebox, SurplusPredictionsNeverHelp) {
  EventClues gt{{{0, 2}, {4, 6}, {8, 10}, {12, 14}}};
  EventSegments pred{gt.intervals};
  double prev = score_event(pred, gt).wcs;
  for (int extra = 1; extra <= 6; ++extra) {
    pred.segments.push_back({100.0 + extra * 3, 101.0 + extra * 3});
    const double now = score_event(pred, gt).wcs;
    EXPECT_LE(now, prev);
    prev = now;
  }
  EXPECT_EQ(prev, 0.0);
}

TEST(Whitebox, PerfectOnlyWhenEveryClusterPerfect) {
  AttributeClues gt{{{"a", {{"Frame1", {0, 0, 4, 4}}}}, {"b", {{"Frame1", {5, 5, 9, 9}}}}}};
  auto r = score_attribute(attribute_boxes({{"1", {0, 0, 4, 4}, "a"}, {"1", {5, 5, 9, 8}, "b"}}), gt);
  EXPECT_LT(r.wcs, 100.0);
}

TEST(EvaluateWhitebox, FromText) {
  CountingQuestion q;
  q.id = "e";
  q.target = CountTarget::Event;
  q.reference_interval = {0, 20};
  q.gt_count = 2;
  q.clues = EventClues{{{2, 4}, {7, 9}}};
  auto ok = evaluate_whitebox(q, "<think>hm</think><answer>[[\"2\",\"4\"]]</answer>");
  EXPECT_EQ(ok.sample_id, "e");
  EXPECT_DOUBLE_EQ(ok.wcs, 50.0);
  auto bad = evaluate_whitebox(q, "two events");
  EXPECT_FALSE(bad.format_ok);
  EXPECT_EQ(bad.failure_reason, "no-answer-tag");

  q.target = CountTarget::Object;
  EXPECT_THROW(evaluate_whitebox(q, "<answer>{}</answer>"), std::invalid_argument);
}

TEST(AggregateWhitebox, Examples) {
  EventClues gt{{{0, 1}}};
  auto good = score_event(EventSegments{gt.intervals}, gt);
  auto bad = score_event(ParseFailure{"format"}, gt);
  auto all = aggregate_whitebox({good, good});
  EXPECT_EQ(all.overall.wcs, 100.0);
  EXPECT_EQ(all.overall.ifa, 100.0);
  auto half = aggregate_whitebox({good, bad});
  EXPECT_EQ(half.overall.wcs, 50.0);
  EXPECT_EQ(half.overall.ifa, 50.0);
  EXPECT_EQ(half.per_target.at("Event").n, 2u);
  EXPECT_THROW(aggregate_whitebox({}), EmptyInputError);
  EXPECT_NE(format_table(half).find("Event"), std::string::npos);
  EXPECT_EQ(to_json(half)["ifa"], 50.0);
}
