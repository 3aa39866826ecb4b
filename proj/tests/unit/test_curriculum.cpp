#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "avcount/curriculum.hpp"
#include "avcount/rng.hpp"

using namespace avcount;

namespace {

RolloutRecord qa(std::string id, std::vector<bool> correct) {
  return {std::move(id), TaskKind::QA, std::move(correct), {}};
}

RolloutRecord grounding(std::string id, std::vector<double> ious) {
  return {std::move(id), TaskKind::TemporalGrounding, {}, std::move(ious)};
}

std::vector<SampleRef> refs(const std::string& prefix, std::size_t n,
                            TaskKind task = TaskKind::QA) {
  std::vector<SampleRef> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({prefix + std::to_string(i), task});
  return out;
}

}  // namespace

TEST(Filter, Examples) {
  EXPECT_TRUE(should_discard(qa("a", {true, true, true, true, true})));
  EXPECT_TRUE(should_discard(grounding("b", {0.95, 0.95, 0.95, 0.95, 0.95})));
  EXPECT_FALSE(should_discard(qa("c", {true, true, true, true, false})));
  EXPECT_FALSE(should_discard(grounding("d", {0.9, 0.9, 0.9, 0.9, 0.9})));
}

TEST(Filter, RefusesEmptyOrWrongKind) {
  EXPECT_THROW(should_discard(qa("a", {})), CurriculumError);
  EXPECT_THROW(should_discard({"x", TaskKind::QA, {}, {0.5}}), CurriculumError);
  EXPECT_THROW(should_discard(grounding("g", {1.5})), CurriculumError);
}

TEST(Filter, KeepsInputOrderAcrossThreads) {
  std::vector<RolloutRecord> records;
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    std::vector<bool> c(5);
    for (std::size_t k = 0; k < 5; ++k) c[k] = rng.uniform01() < 0.7;
    records.push_back(qa("q" + std::to_string(i), c));
  }
  const auto one = filter_samples(records, {0.9, 1});
  for (unsigned t : {2u, 3u, 8u, 64u}) EXPECT_EQ(filter_samples(records, {0.9, t}), one);
  for (const auto& r : records) {
    const bool all = std::all_of(r.correct.begin(), r.correct.end(), [](bool b) { return b; });
    const bool kept = std::any_of(one.begin(), one.end(),
                                  [&](const SampleRef& s) { return s.sample_id == r.sample_id; });
    EXPECT_EQ(kept, !all);
  }
}

TEST(Filter, ParallelErrorMatchesSequential) {
  std::vector<RolloutRecord> records(100, qa("ok", {false}));
  records[70] = qa("bad70", {});
  records[20] = qa("bad20", {});
  std::string seq, par;
  try { filter_samples(records, {0.9, 1}); } catch (const CurriculumError& e) { seq = e.what(); }
  try { filter_samples(records, {0.9, 4}); } catch (const CurriculumError& e) { par = e.what(); }
  EXPECT_NE(seq.find("bad20"), std::string::npos);
  EXPECT_EQ(seq, par);
}

TEST(BuildStage, Examples) {
  const auto fresh = refs("n", 1000);
  const auto history = refs("h", 5000);
  auto stage = build_stage(fresh, history, 0.2, 1);
  EXPECT_EQ(std::count_if(stage.begin(), stage.end(), [](const StageEntry& e) { return e.review; }),
            200);
  EXPECT_EQ(stage.size(), 1200u);

  auto no_history = build_stage(fresh, {}, 0.2, 1);
  EXPECT_EQ(no_history.size(), 1000u);
  std::set<std::string> ids;
  for (const auto& e : no_history) ids.insert(e.sample.sample_id);
  EXPECT_EQ(ids.size(), 1000u);

  auto none = build_stage(fresh, history, 0.0, 1);
  EXPECT_EQ(none.size(), 1000u);
}

TEST(BuildStage, SizeLaw) {
  for (std::size_t n_new : {0u, 1u, 4u, 5u, 37u, 100u}) {
    for (std::size_t n_hist : {0u, 3u, 10u, 1000u}) {
      for (double f : {0.0, 0.2, 0.29, 0.5, 1.0}) {
        const auto stage = build_stage(refs("n", n_new), refs("h", n_hist), f, 9);
        const std::size_t want = static_cast<std::size_t>(f * 100 + 0.5) * n_new / 100;
        EXPECT_EQ(stage.size(), n_new + std::min(want, n_hist)) << n_new << " " << n_hist << " " << f;
        std::set<std::string> ids;
        for (const auto& e : stage) ids.insert(e.sample.sample_id);
        EXPECT_EQ(ids.size(), stage.size());
      }
    }
  }
}

TEST(BuildStage, DeterministicAndSeedSensitive) {
  const auto fresh = refs("n", 300);
  const auto history = refs("h", 300);
  auto a = build_stage(fresh, history, 0.2, 42);
  auto b = build_stage(fresh, history, 0.2, 42);
  auto c = build_stage(fresh, history, 0.2, 43);
  auto ids = [](const std::vector<StageEntry>& v) {
    std::vector<std::string> out;
    for (const auto& e : v) out.push_back(e.sample.sample_id);
    return out;
  };
  EXPECT_EQ(ids(a), ids(b));
  EXPECT_NE(ids(a), ids(c));
}

TEST(BuildStage, ReviewDrawIsRoughlyUniform) {
  const auto fresh = refs("n", 10);
  const auto history = refs("h", 10);
  std::map<std::string, int> hits;
  for (std::uint64_t seed = 0; seed < 5000; ++seed) {
    for (const auto& e : build_stage(fresh, history, 0.2, seed)) {
      if (e.review) ++hits[e.sample.sample_id];
    }
  }
  // 2 of 10 drawn per run: expected 1000 hits each, sd about 28.
  for (const auto& [id, n] : hits) {
    EXPECT_GT(n, 850) << id;
    EXPECT_LT(n, 1150) << id;
  }
}

TEST(BuildStage, RejectsBadFraction) {
  EXPECT_THROW(build_stage(refs("n", 1), {}, 1.5, 0), CurriculumError);
  EXPECT_THROW(build_stage(refs("n", 1), {}, -0.1, 0), CurriculumError);
}

TEST(Difficulty, Examples) {
  EXPECT_EQ(difficulty_of(qa("a", {true, false, false, false, false})), 1);
  EXPECT_EQ(difficulty_of(grounding("b", {0.9, 0.9, 0.9, 0.2, 0.2}), 0.5), 3);
  EXPECT_EQ(difficulty_of(qa("c", {false, false, false, false, false})), 0);
  EXPECT_EQ(difficulty_of(grounding("d", {0.5, 0.5, 0.49, 0, 0}), 0.5), 2);
  EXPECT_THROW(difficulty_of(qa("e", {true, false})), CurriculumError);
}

TEST(FullTask, FourTasksFillQuota) {
  DifficultyPools pools;
  for (auto task : {TaskKind::QA, TaskKind::TemporalGrounding, TaskKind::SpatialGrounding,
                    TaskKind::Counting}) {
    for (int d = 0; d <= 5; ++d) {
      pools[task][d] = refs(std::string(to_string(task)) + "_" + std::to_string(d) + "_", 1000, task);
    }
  }
  auto out = sample_full_task(pools, 2500, 7);
  EXPECT_EQ(out.entries.size(), 10000u);
  EXPECT_TRUE(out.warnings.empty());
  std::map<TaskKind, std::map<int, int>> counts;
  for (const auto& e : out.entries) ++counts[e.sample.task][e.difficulty];
  for (const auto& [task, buckets] : counts) {
    int lo = 1 << 30, hi = 0;
    for (const auto& [d, n] : buckets) { lo = std::min(lo, n); hi = std::max(hi, n); }
    EXPECT_LE(hi - lo, 1);
  }
}

TEST(FullTask, ShortBucketRedistributes) {
  DifficultyPools pools;
  pools[TaskKind::QA][0] = refs("a", 100);
  pools[TaskKind::QA][1] = refs("b", 3);
  pools[TaskKind::QA][2] = {};
  pools[TaskKind::QA][3] = refs("c", 100);
  auto out = sample_full_task(pools, 60, 1);
  EXPECT_EQ(out.entries.size(), 60u);
  std::map<int, int> counts;
  for (const auto& e : out.entries) ++counts[e.difficulty];
  EXPECT_EQ(counts[1], 3);
  EXPECT_EQ(counts[0] + counts[3], 57);
  EXPECT_LE(std::abs(counts[0] - counts[3]), 1);
  EXPECT_EQ(counts.count(2), 0u);
}

TEST(FullTask, ExhaustedPoolWarns) {
  DifficultyPools pools;
  pools[TaskKind::Counting][4] = refs("x", 5, TaskKind::Counting);
  auto out = sample_full_task(pools, 10, 1);
  EXPECT_EQ(out.entries.size(), 5u);
  ASSERT_EQ(out.warnings.size(), 1u);
  EXPECT_NE(out.warnings[0].find("counting"), std::string::npos);
}

TEST(FullTask, SameSeedSameOutput) {
  DifficultyPools pools;
  pools[TaskKind::QA][1] = refs("a", 50);
  pools[TaskKind::QA][2] = refs("b", 50);
  auto a = sample_full_task(pools, 40, 5);
  auto b = sample_full_task(pools, 40, 5);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) EXPECT_EQ(a.entries[i].sample, b.entries[i].sample);
}

TEST(Curriculum, StandardPlanOrder) {
  auto plan = CurriculumPlan::standard(3);
  ASSERT_EQ(plan.stages.size(), 3u);
  EXPECT_EQ(plan.stages[0].tasks, std::vector<TaskKind>{TaskKind::QA});
  EXPECT_EQ(plan.stages[2].tasks, std::vector<TaskKind>{TaskKind::Counting});
  for (const auto& s : plan.stages) {
    EXPECT_EQ(s.epochs, 2);
    EXPECT_DOUBLE_EQ(s.review_fraction, 0.2);
  }
}

TEST(Curriculum, RunIsDeterministicAndReviewsEarlierStages) {
  auto plan = CurriculumPlan::standard(11);
  plan.fulltask_quota_per_task = 100;
  auto source = [](const StageSpec& stage, int epoch) {
    std::vector<RolloutRecord> out;
    for (auto task : stage.tasks) {
      for (int i = 0; i < 50; ++i) {
        const std::string id = std::string(to_string(task)) + std::to_string(i);
        if (is_grounding(task)) {
          out.push_back({id, task, {}, std::vector<double>(5, (i + epoch) % 3 == 0 ? 0.95 : 0.4)});
        } else {
          out.push_back({id, task, std::vector<bool>(5, (i + epoch) % 4 == 0), {}});
        }
      }
    }
    return out;
  };
  std::vector<RolloutRecord> finals = source({"all", {TaskKind::QA, TaskKind::Counting}, 1, 0}, 1);
  auto a = run_curriculum(plan, source, finals, 1);
  auto b = run_curriculum(plan, source, finals, 4);
  EXPECT_EQ(manifest_to_jsonl(a.manifest), manifest_to_jsonl(b.manifest));

  std::size_t stage0_review = 0;
  for (const auto& e : a.manifest) {
    if (e.stage == "qa" && e.review) ++stage0_review;
    if (e.stage == "grounding" && e.review) EXPECT_EQ(e.sample.task, TaskKind::QA);
  }
  EXPECT_EQ(stage0_review, 0u);
  EXPECT_EQ(a.warnings.size(), 2u);
}

TEST(CurriculumJson, RoundTrip) {
  auto r = grounding("g1", {0.1, 0.2, 0.3, 0.4, 0.5});
  auto back = rollout_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.sample_id, r.sample_id);
  EXPECT_EQ(back.ious, r.ious);
  auto q = qa("q1", {true, false, true, false, true});
  EXPECT_EQ(rollout_from_json(to_json(q)).correct, q.correct);
  SampleRef s{"s", TaskKind::Counting};
  EXPECT_EQ(sample_ref_from_json(to_json(s)), s);
  ManifestEntry m{s, "full_task", 0, false, 3};
  auto j = to_json(m, 7);
  EXPECT_EQ(j["position"], 7);
  EXPECT_EQ(j["difficulty"], 3);
}
