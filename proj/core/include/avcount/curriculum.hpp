#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avcount/rewards.hpp"

namespace avcount {

inline constexpr std::size_t kRolloutsPerSample = 5;

bool is_grounding(TaskKind t);

// Offline rollout outcomes for one sample. QA and counting records carry
// per-rollout correctness, grounding records carry per-rollout IoU.
struct RolloutRecord {
  std::string sample_id;
  TaskKind task{TaskKind::QA};
  std::vector<bool> correct;
  std::vector<double> ious;

  std::size_t n_rollouts() const { return is_grounding(task) ? ious.size() : correct.size(); }
};

class CurriculumError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SampleRef {
  std::string sample_id;
  TaskKind task{TaskKind::QA};
  bool operator==(const SampleRef&) const = default;
};

struct FilterOptions {
  double iou_discard_above{0.9};
  unsigned threads{1};
};

// True when the sample is already solved: every rollout correct, or mean IoU
// above the threshold. Throws CurriculumError for a record with no rollouts or
// with outcomes of the wrong kind.
bool should_discard(const RolloutRecord& r, double iou_discard_above = 0.9);

// Kept samples, in input order. Output does not depend on `threads`.
std::vector<SampleRef> filter_samples(std::span<const RolloutRecord> records,
                                      const FilterOptions& opts = {});

struct StageEntry {
  SampleRef sample;
  bool review{false};
};

// All of `new_samples` plus floor(review_fraction * |new|) distinct samples
// drawn uniformly from `history` (all of it when smaller), shuffled.
std::vector<StageEntry> build_stage(std::span<const SampleRef> new_samples,
                                    std::span<const SampleRef> history, double review_fraction,
                                    std::uint64_t seed);

// Number of passing rollouts out of five. A grounding rollout passes when its
// IoU reaches `pass_threshold`.
int difficulty_of(const RolloutRecord& r, double pass_threshold = 0.5);

using DifficultyPools = std::map<TaskKind, std::map<int, std::vector<SampleRef>>>;

DifficultyPools build_difficulty_pools(std::span<const RolloutRecord> records,
                                       double pass_threshold = 0.5);

struct FullTaskEntry {
  SampleRef sample;
  int difficulty{0};
};

struct FullTaskSample {
  std::vector<FullTaskEntry> entries;
  std::vector<std::string> warnings;
};

// Draws `quota_per_task` samples per task, round-robin over its non-empty
// difficulty buckets so bucket counts differ by at most one until a bucket
// runs dry; the remainder then flows to the other buckets.
FullTaskSample sample_full_task(const DifficultyPools& pools, std::size_t quota_per_task,
                                std::uint64_t seed);

struct StageSpec {
  std::string name;
  std::vector<TaskKind> tasks;
  int epochs{2};
  double review_fraction{0.2};
};

struct CurriculumPlan {
  std::vector<StageSpec> stages;
  std::size_t fulltask_quota_per_task{2500};
  double iou_discard_above{0.9};
  double pass_threshold{0.5};
  std::uint64_t seed{0};

  // QA -> grounding -> counting, two epochs each, 20% review.
  static CurriculumPlan standard(std::uint64_t seed = 0);
};

struct ManifestEntry {
  SampleRef sample;
  std::string stage;
  int epoch{0};  // 1-based; 0 for the full-task stage
  bool review{false};
  std::optional<int> difficulty;
};

struct CurriculumRun {
  std::vector<ManifestEntry> manifest;
  std::vector<std::string> warnings;
};

// Supplies the rollout records gathered before a given stage epoch.
using RolloutSource =
    std::function<std::vector<RolloutRecord>(const StageSpec& stage, int epoch)>;

// filter -> stage (per epoch) for every curriculum stage, then the balanced
// full-task draw over `final_rollouts` after the same filtering.
CurriculumRun run_curriculum(const CurriculumPlan& plan, const RolloutSource& rollouts,
                             std::span<const RolloutRecord> final_rollouts, unsigned threads = 1);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

RolloutRecord rollout_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RolloutRecord& r);
SampleRef sample_ref_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SampleRef& s);
nlohmann::json to_json(const ManifestEntry& e, std::size_t position);
std::string manifest_to_jsonl(std::span<const ManifestEntry> entries);

}  // namespace avcount
