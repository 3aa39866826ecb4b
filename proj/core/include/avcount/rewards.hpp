#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "avcount/extract.hpp"
#include "avcount/model.hpp"

namespace avcount {

enum class TaskKind { QA, TemporalGrounding, SpatialGrounding, Counting };
std::string_view to_string(TaskKind t);
std::optional<TaskKind> parse_task(std::string_view s);

// 1 iff the text is exactly one <think>...</think> block followed by exactly
// one <answer>...</answer> block, with only whitespace around and between them.
int reward_gformat(std::string_view text);

// m * s over the <answer> content; 0 when the think/answer structure is absent.
double reward_jformat(std::string_view text, const ItemRequirement& req);

// Exact match after trimming, case folding and whitespace collapsing.
int reward_acc(std::string_view pred, std::string_view gt);

// Sum of greedily matched scores divided by max(|preds|, |gts|); 1 when both are empty.
double reward_iou(std::span<const TimeInterval> preds, std::span<const TimeInterval> gts);
// Spatial variant scores pairs with CIoU clamped to [0, 1].
double reward_iou(std::span<const BoundingBox> preds, std::span<const BoundingBox> gts);

// 1 - min(1, |pred - gt| / gt); exact-match accuracy when gt == 0.
double reward_rmae(std::int64_t pred, std::int64_t gt);
// Parse failures earn 0.
double reward_rmae(const ParsedAnswer& pred, std::int64_t gt);

struct QaTruth {
  std::string answer;
};
struct CountTruth {
  std::int64_t count{0};
};
struct TemporalTruth {
  std::vector<TimeInterval> segments;
};
struct SpatialTruth {
  std::vector<BoundingBox> boxes;
};
using TaskTruth = std::variant<QaTruth, CountTruth, TemporalTruth, SpatialTruth>;

struct RewardWeights {
  double format{1.0};
  double task{1.0};
};

struct RewardBreakdown {
  TaskKind task{TaskKind::QA};
  int r_gformat{0};
  std::optional<double> r_jformat;
  std::string task_reward_name;  // "acc", "iou" or "rmae"
  double r_task{0.0};
  double total{0.0};
  RewardWeights weights;
};

class RewardError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws RewardError when `gt` does not fit `task`.
RewardBreakdown compute_reward(TaskKind task, std::string_view raw_text, const TaskTruth& gt,
                               const RewardWeights& weights = {});

// Batch record helpers for the JSONL reward interface.
struct RewardRequest {
  std::string id;
  TaskKind task{TaskKind::QA};
  std::string text;
  TaskTruth gt;
};
RewardRequest reward_request_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RewardRequest& r);
nlohmann::json to_json(const RewardBreakdown& b);

}  // namespace avcount
