#include "avcount/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <tuple>

#include "avcount/geometry.hpp"
#include "avcount/io.hpp"

namespace avcount {

std::string_view to_string(TaskKind t) {
  switch (t) {
    case TaskKind::QA: return "qa";
    case TaskKind::TemporalGrounding: return "temporal_grounding";
    case TaskKind::SpatialGrounding: return "spatial_grounding";
    case TaskKind::Counting: return "counting";
  }
  return "?";
}

std::optional<TaskKind> parse_task(std::string_view s) {
  for (auto t : {TaskKind::QA, TaskKind::TemporalGrounding, TaskKind::SpatialGrounding,
                 TaskKind::Counting}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

namespace {

bool all_space(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::size_t count_of(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string normalize_choice(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string answer_content(std::string_view text) {
  if (auto a = extract_tagged(text, "answer")) return *a;
  return std::string(text);
}

template <typename T, typename Less, typename Score>
double matched_average(std::span<const T> preds, std::span<const T> gts, Less less, Score score) {
  if (preds.empty() && gts.empty()) return 1.0;
  std::vector<T> p(preds.begin(), preds.end());
  std::vector<T> g(gts.begin(), gts.end());
  std::sort(p.begin(), p.end(), less);
  std::sort(g.begin(), g.end(), less);
  const auto match = greedy_match(std::span<const T>(p), std::span<const T>(g), score);
  return match.total_iou / static_cast<double>(std::max(p.size(), g.size()));
}

}  // namespace

int reward_gformat(std::string_view text) {
  static constexpr std::string_view kThinkOpen = "<think>";
  static constexpr std::string_view kThinkClose = "</think>";
  static constexpr std::string_view kAnswerOpen = "<answer>";
  static constexpr std::string_view kAnswerClose = "</answer>";
  for (auto tag : {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose}) {
    if (count_of(text, tag) != 1) return 0;
  }
  const auto to = text.find(kThinkOpen);
  const auto tc = text.find(kThinkClose);
  const auto ao = text.find(kAnswerOpen);
  const auto ac = text.find(kAnswerClose);
  if (!(to + kThinkOpen.size() <= tc && tc + kThinkClose.size() <= ao &&
        ao + kAnswerOpen.size() <= ac)) {
    return 0;
  }
  const auto after_think = tc + kThinkClose.size();
  const auto after_answer = ac + kAnswerClose.size();
  if (!all_space(text.substr(0, to)) || !all_space(text.substr(after_think, ao - after_think)) ||
      !all_space(text.substr(after_answer))) {
    return 0;
  }
  return 1;
}

double reward_jformat(std::string_view text, const ItemRequirement& req) {
  if (reward_gformat(text) == 0) return 0.0;
  const auto content = extract_tagged(text, "answer");
  if (!content) return 0.0;
  const auto rec = recover_json(*content);
  if (!rec.value) return 0.0;
  return rec.multiplier * key_completeness(*rec.value, req).score;
}

int reward_acc(std::string_view pred, std::string_view gt) {
  return normalize_choice(pred) == normalize_choice(gt) ? 1 : 0;
}

double reward_iou(std::span<const TimeInterval> preds, std::span<const TimeInterval> gts) {
  return matched_average(
      preds, gts,
      [](const TimeInterval& l, const TimeInterval& r) {
        return std::tie(l.start_s, l.end_s) < std::tie(r.start_s, r.end_s);
      },
      [](const TimeInterval& p, const TimeInterval& g) { return interval_iou(p, g); });
}

double reward_iou(std::span<const BoundingBox> preds, std::span<const BoundingBox> gts) {
  return matched_average(
      preds, gts,
      [](const BoundingBox& l, const BoundingBox& r) {
        return std::tie(l.x_min, l.y_min, l.x_max, l.y_max) <
               std::tie(r.x_min, r.y_min, r.x_max, r.y_max);
      },
      [](const BoundingBox& p, const BoundingBox& g) {
        return std::clamp(box_ciou(p, g), 0.0, 1.0);
      });
}

double reward_rmae(std::int64_t pred, std::int64_t gt) {
  if (gt == 0) return pred == 0 ? 1.0 : 0.0;
  const double rel = std::fabs(static_cast<double>(pred) - static_cast<double>(gt)) /
                     std::fabs(static_cast<double>(gt));
  return 1.0 - std::min(1.0, rel);
}

double reward_rmae(const ParsedAnswer& pred, std::int64_t gt) {
  if (const auto* c = std::get_if<CountAnswer>(&pred)) return reward_rmae(c->value, gt);
  return 0.0;
}

RewardBreakdown compute_reward(TaskKind task, std::string_view raw_text, const TaskTruth& gt,
                               const RewardWeights& weights) {
  RewardBreakdown b;
  b.task = task;
  b.weights = weights;
  b.r_gformat = reward_gformat(raw_text);

  auto mismatch = [&]() {
    return RewardError("ground truth does not match task '" + std::string(to_string(task)) + "'");
  };

  double format_component = b.r_gformat;
  switch (task) {
    case TaskKind::QA: {
      const auto* t = std::get_if<QaTruth>(&gt);
      if (!t) throw mismatch();
      b.task_reward_name = "acc";
      b.r_task = reward_acc(answer_content(raw_text), t->answer);
      break;
    }
    case TaskKind::Counting: {
      const auto* t = std::get_if<CountTruth>(&gt);
      if (!t) throw mismatch();
      b.task_reward_name = "rmae";
      b.r_task = reward_rmae(parse_count_answer(raw_text), t->count);
      break;
    }
    case TaskKind::TemporalGrounding: {
      const auto* t = std::get_if<TemporalTruth>(&gt);
      if (!t) throw mismatch();
      b.r_jformat = reward_jformat(raw_text, ItemRequirement::event_pair());
      format_component = *b.r_jformat;
      b.task_reward_name = "iou";
      const auto parsed = parse_event_answer(raw_text);
      if (const auto* segs = std::get_if<EventSegments>(&parsed)) {
        b.r_task = reward_iou(std::span<const TimeInterval>(segs->segments),
                              std::span<const TimeInterval>(t->segments));
      }
      break;
    }
    case TaskKind::SpatialGrounding: {
      const auto* t = std::get_if<SpatialTruth>(&gt);
      if (!t) throw mismatch();
      b.r_jformat = reward_jformat(raw_text, ItemRequirement::box());
      format_component = *b.r_jformat;
      b.task_reward_name = "iou";
      const auto parsed = parse_box_list_answer(raw_text);
      if (!parsed.failure) {
        b.r_task = reward_iou(std::span<const BoundingBox>(parsed.boxes),
                              std::span<const BoundingBox>(t->boxes));
      }
      break;
    }
  }
  b.total = weights.format * format_component + weights.task * b.r_task;
  return b;
}

RewardRequest reward_request_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("reward request must be an object");
  RewardRequest r;
  if (auto it = j.find("id"); it != j.end()) {
    r.id = it->is_string() ? it->get<std::string>() : it->dump();
  }
  const auto& task = j.at("task");
  if (!task.is_string()) throw SchemaError("task must be a string");
  auto kind = parse_task(task.get<std::string>());
  if (!kind) throw SchemaError("unknown task '" + task.get<std::string>() + "'");
  r.task = *kind;
  const auto& text = j.at("text");
  if (!text.is_string()) throw SchemaError("text must be a string");
  r.text = text.get<std::string>();

  const auto& gt = j.at("gt");
  if (!gt.is_object()) throw SchemaError("gt must be an object");
  switch (r.task) {
    case TaskKind::QA: {
      const auto& a = gt.at("answer");
      if (!a.is_string()) throw SchemaError("gt.answer must be a string");
      r.gt = QaTruth{a.get<std::string>()};
      break;
    }
    case TaskKind::Counting: {
      const auto& c = gt.at("count");
      if (!c.is_number_integer()) throw SchemaError("gt.count must be an integer");
      r.gt = CountTruth{c.get<std::int64_t>()};
      break;
    }
    case TaskKind::TemporalGrounding: {
      const auto& segs = gt.at("segments");
      if (!segs.is_array()) throw SchemaError("gt.segments must be an array");
      TemporalTruth t;
      for (const auto& s : segs) t.segments.push_back(interval_from_json(s));
      r.gt = std::move(t);
      break;
    }
    case TaskKind::SpatialGrounding: {
      const auto& boxes = gt.at("boxes");
      if (!boxes.is_array()) throw SchemaError("gt.boxes must be an array");
      SpatialTruth t;
      for (const auto& b : boxes) t.boxes.push_back(box_from_json(b));
      r.gt = std::move(t);
      break;
    }
  }
  return r;
}

nlohmann::json to_json(const RewardRequest& r) {
  nlohmann::json gt;
  if (const auto* qa = std::get_if<QaTruth>(&r.gt)) {
    gt = {{"answer", qa->answer}};
  } else if (const auto* c = std::get_if<CountTruth>(&r.gt)) {
    gt = {{"count", c->count}};
  } else if (const auto* t = std::get_if<TemporalTruth>(&r.gt)) {
    auto segs = nlohmann::json::array();
    for (const auto& s : t->segments) segs.push_back(interval_to_json(s));
    gt = {{"segments", segs}};
  } else {
    auto boxes = nlohmann::json::array();
    for (const auto& b : std::get<SpatialTruth>(r.gt).boxes) boxes.push_back(box_to_json(b));
    gt = {{"boxes", boxes}};
  }
  return {{"id", r.id}, {"task", std::string(to_string(r.task))}, {"text", r.text}, {"gt", gt}};
}

nlohmann::json to_json(const RewardBreakdown& b) {
  nlohmann::json j = {{"task", std::string(to_string(b.task))},
                      {"r_gformat", b.r_gformat},
                      {"task_reward", b.task_reward_name},
                      {"r_task", b.r_task},
                      {"total", b.total},
                      {"weights", {{"format", b.weights.format}, {"task", b.weights.task}}}};
  if (b.r_jformat) j["r_jformat"] = *b.r_jformat;
  return j;
}

}  // namespace avcount
