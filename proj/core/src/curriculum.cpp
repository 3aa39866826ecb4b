#include "avcount/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <thread>

#include "avcount/io.hpp"
#include "avcount/rng.hpp"

namespace avcount {

bool is_grounding(TaskKind t) {
  return t == TaskKind::TemporalGrounding || t == TaskKind::SpatialGrounding;
}

namespace {

void check_record(const RolloutRecord& r) {
  if (r.n_rollouts() == 0) {
    throw CurriculumError("rollout record '" + r.sample_id + "' has no rollouts");
  }
  if (is_grounding(r.task) ? !r.correct.empty() : !r.ious.empty()) {
    throw CurriculumError("rollout record '" + r.sample_id + "' carries outcomes of the wrong kind");
  }
  for (double iou : r.ious) {
    if (!(iou >= 0.0 && iou <= 1.0)) {
      throw CurriculumError("rollout record '" + r.sample_id + "' has IoU outside [0, 1]");
    }
  }
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = mix64(seed + 0x9e3779b97f4a7c15ULL * (a + 1));
  return mix64(z + 0x9e3779b97f4a7c15ULL * (b + 1));
}

bool should_discard(const RolloutRecord& r, double iou_discard_above) {
  check_record(r);
  if (is_grounding(r.task)) {
    const double mean =
        std::accumulate(r.ious.begin(), r.ious.end(), 0.0) / static_cast<double>(r.ious.size());
    return mean > iou_discard_above;
  }
  return std::all_of(r.correct.begin(), r.correct.end(), [](bool c) { return c; });
}

std::vector<SampleRef> filter_samples(std::span<const RolloutRecord> records,
                                      const FilterOptions& opts) {
  std::vector<char> discard(records.size(), 0);
  const std::size_t threads =
      std::clamp<std::size_t>(opts.threads, 1, std::max<std::size_t>(1, records.size()));

  if (threads == 1) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      discard[i] = should_discard(records[i], opts.iou_discard_above);
    }
  } else {
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (records.size() + threads - 1) / threads;
    {
      std::vector<std::jthread> workers;
      for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
          const std::size_t begin = t * chunk;
          const std::size_t end = std::min(records.size(), begin + chunk);
          try {
            for (std::size_t i = begin; i < end; ++i) {
              discard[i] = should_discard(records[i], opts.iou_discard_above);
            }
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    // Report the failure a sequential pass would have hit first.
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<SampleRef> kept;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!discard[i]) kept.push_back({records[i].sample_id, records[i].task});
  }
  return kept;
}

std::vector<StageEntry> build_stage(std::span<const SampleRef> new_samples,
                                    std::span<const SampleRef> history, double review_fraction,
                                    std::uint64_t seed) {
  if (!(review_fraction >= 0.0 && review_fraction <= 1.0)) {
    throw CurriculumError("review fraction must lie in [0, 1]");
  }
  Rng rng(seed);

  std::set<std::string> seen;
  for (const auto& s : new_samples) seen.insert(s.sample_id);
  std::vector<SampleRef> pool;
  for (const auto& h : history) {
    if (seen.insert(h.sample_id).second) pool.push_back(h);
  }

  // The epsilon keeps products such as 0.29 * 100 from flooring to 28.
  const auto wanted = static_cast<std::size_t>(
      std::floor(review_fraction * static_cast<double>(new_samples.size()) + 1e-9));
  const std::size_t n_review = std::min(wanted, pool.size());

  // Partial Fisher-Yates: the first n_review slots become a uniform sample.
  for (std::size_t i = 0; i < n_review; ++i) {
    std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
  }

  std::vector<StageEntry> out;
  out.reserve(new_samples.size() + n_review);
  for (const auto& s : new_samples) out.push_back({s, false});
  for (std::size_t i = 0; i < n_review; ++i) out.push_back({pool[i], true});
  rng.shuffle(out);
  return out;
}

int difficulty_of(const RolloutRecord& r, double pass_threshold) {
  check_record(r);
  if (r.n_rollouts() != kRolloutsPerSample) {
    throw CurriculumError("rollout record '" + r.sample_id + "' has " +
                          std::to_string(r.n_rollouts()) + " rollouts, expected 5");
  }
  if (is_grounding(r.task)) {
    return static_cast<int>(std::count_if(r.ious.begin(), r.ious.end(),
                                          [&](double iou) { return iou >= pass_threshold; }));
  }
  return static_cast<int>(std::count(r.correct.begin(), r.correct.end(), true));
}

DifficultyPools build_difficulty_pools(std::span<const RolloutRecord> records,
                                       double pass_threshold) {
  DifficultyPools pools;
  for (const auto& r : records) {
    pools[r.task][difficulty_of(r, pass_threshold)].push_back({r.sample_id, r.task});
  }
  return pools;
}

FullTaskSample sample_full_task(const DifficultyPools& pools, std::size_t quota_per_task,
                                std::uint64_t seed) {
  Rng rng(seed);
  FullTaskSample out;

  for (const auto& [task, buckets] : pools) {
    std::vector<std::pair<int, std::vector<SampleRef>>> shuffled;
    for (const auto& [difficulty, members] : buckets) {
      if (members.empty()) continue;
      auto copy = members;
      rng.shuffle(copy);
      shuffled.emplace_back(difficulty, std::move(copy));
    }

    std::vector<std::size_t> cursor(shuffled.size(), 0);
    std::size_t drawn = 0;
    bool progress = true;
    while (drawn < quota_per_task && progress) {
      progress = false;
      for (std::size_t b = 0; b < shuffled.size() && drawn < quota_per_task; ++b) {
        if (cursor[b] >= shuffled[b].second.size()) continue;
        out.entries.push_back({shuffled[b].second[cursor[b]++], shuffled[b].first});
        ++drawn;
        progress = true;
      }
    }
    if (drawn < quota_per_task) {
      out.warnings.push_back("task " + std::string(to_string(task)) + ": requested " +
                             std::to_string(quota_per_task) + ", drew " + std::to_string(drawn) +
                             " (pool exhausted)");
    }
  }
  rng.shuffle(out.entries);
  return out;
}

CurriculumPlan CurriculumPlan::standard(std::uint64_t seed) {
  CurriculumPlan plan;
  plan.seed = seed;
  plan.stages = {
      {"qa", {TaskKind::QA}, 2, 0.2},
      {"grounding", {TaskKind::TemporalGrounding, TaskKind::SpatialGrounding}, 2, 0.2},
      {"counting", {TaskKind::Counting}, 2, 0.2},
  };
  return plan;
}

CurriculumRun run_curriculum(const CurriculumPlan& plan, const RolloutSource& rollouts,
                             std::span<const RolloutRecord> final_rollouts, unsigned threads) {
  CurriculumRun run;
  const FilterOptions filter{plan.iou_discard_above, threads};
  std::vector<SampleRef> history;
  std::set<std::string> history_ids;

  for (std::size_t s = 0; s < plan.stages.size(); ++s) {
    const auto& stage = plan.stages[s];
    std::vector<SampleRef> trained;
    for (int epoch = 1; epoch <= stage.epochs; ++epoch) {
      auto records = rollouts(stage, epoch);
      std::erase_if(records, [&](const RolloutRecord& r) {
        return std::find(stage.tasks.begin(), stage.tasks.end(), r.task) == stage.tasks.end();
      });
      const auto kept = filter_samples(records, filter);
      const auto entries = build_stage(kept, history, stage.review_fraction,
                                       derive_seed(plan.seed, s + 1, static_cast<unsigned>(epoch)));
      for (const auto& e : entries) {
        run.manifest.push_back({e.sample, stage.name, epoch, e.review, std::nullopt});
      }
      trained.insert(trained.end(), kept.begin(), kept.end());
    }
    for (auto& t : trained) {
      if (history_ids.insert(t.sample_id).second) history.push_back(std::move(t));
    }
  }

  const auto kept = filter_samples(final_rollouts, filter);
  std::set<std::string> kept_ids;
  for (const auto& k : kept) kept_ids.insert(k.sample_id);
  std::vector<RolloutRecord> eligible;
  for (const auto& r : final_rollouts) {
    if (kept_ids.contains(r.sample_id)) eligible.push_back(r);
  }
  auto full = sample_full_task(build_difficulty_pools(eligible, plan.pass_threshold),
                               plan.fulltask_quota_per_task, derive_seed(plan.seed, 0));
  for (const auto& e : full.entries) {
    run.manifest.push_back({e.sample, "full_task", 0, false, e.difficulty});
  }
  run.warnings = std::move(full.warnings);
  return run;
}

RolloutRecord rollout_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("rollout record must be an object");
  RolloutRecord r;
  const auto& id = j.at("sample_id");
  if (!id.is_string()) throw SchemaError("sample_id must be a string");
  r.sample_id = id.get<std::string>();
  const auto& task = j.at("task");
  auto kind = task.is_string() ? parse_task(task.get<std::string>()) : std::nullopt;
  if (!kind) throw SchemaError("unknown task " + task.dump());
  r.task = *kind;
  if (is_grounding(r.task)) {
    const auto& ious = j.at("ious");
    if (!ious.is_array()) throw SchemaError("ious must be an array");
    for (const auto& v : ious) {
      if (!v.is_number()) throw SchemaError("ious must be numeric");
      r.ious.push_back(v.get<double>());
    }
  } else {
    const auto& correct = j.at("correct");
    if (!correct.is_array()) throw SchemaError("correct must be an array");
    for (const auto& v : correct) {
      if (!v.is_boolean()) throw SchemaError("correct must hold booleans");
      r.correct.push_back(v.get<bool>());
    }
  }
  return r;
}

nlohmann::json to_json(const RolloutRecord& r) {
  nlohmann::json j = {{"sample_id", r.sample_id}, {"task", std::string(to_string(r.task))}};
  if (is_grounding(r.task)) {
    j["ious"] = r.ious;
  } else {
    auto arr = nlohmann::json::array();
    for (bool c : r.correct) arr.push_back(c);
    j["correct"] = arr;
  }
  return j;
}

SampleRef sample_ref_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("sample record must be an object");
  const auto& id = j.at("sample_id");
  if (!id.is_string()) throw SchemaError("sample_id must be a string");
  const auto& task = j.at("task");
  auto kind = task.is_string() ? parse_task(task.get<std::string>()) : std::nullopt;
  if (!kind) throw SchemaError("unknown task " + task.dump());
  return {id.get<std::string>(), *kind};
}

nlohmann::json to_json(const SampleRef& s) {
  return {{"sample_id", s.sample_id}, {"task", std::string(to_string(s.task))}};
}

nlohmann::json to_json(const ManifestEntry& e, std::size_t position) {
  nlohmann::json j = {{"position", position},
                      {"sample_id", e.sample.sample_id},
                      {"task", std::string(to_string(e.sample.task))},
                      {"stage", e.stage},
                      {"epoch", e.epoch},
                      {"review", e.review}};
  if (e.difficulty) j["difficulty"] = *e.difficulty;
  return j;
}

std::string manifest_to_jsonl(std::span<const ManifestEntry> entries) {
  std::string out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out += to_json(entries[i], i).dump();
    out += '\n';
  }
  return out;
}

}  // namespace avcount
