#include "avcount/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace avcount {

bool is_valid(const TimeInterval& t) {
  return std::isfinite(t.start_s) && std::isfinite(t.end_s) && t.start_s >= 0.0 &&
         t.end_s >= 0.0 && t.start_s <= t.end_s;
}

bool is_valid(const BoundingBox& b) {
  return std::isfinite(b.x_min) && std::isfinite(b.y_min) && std::isfinite(b.x_max) &&
         std::isfinite(b.y_max) && b.x_min <= b.x_max && b.y_min <= b.y_max;
}

std::string_view to_string(QueryModality m) {
  switch (m) {
    case QueryModality::V: return "V";
    case QueryModality::A: return "A";
    case QueryModality::A2V: return "A2V";
    case QueryModality::V2A: return "V2A";
    case QueryModality::AV: return "AV";
  }
  return "?";
}

std::string_view to_string(CountTarget t) {
  switch (t) {
    case CountTarget::Event: return "Event";
    case CountTarget::Object: return "Object";
    case CountTarget::Attribute: return "Attribute";
  }
  return "?";
}

std::string_view to_string(Setting s) {
  switch (s) {
    case Setting::LongAcc: return "LongAcc";
    case Setting::RefAcc: return "RefAcc";
    case Setting::WhiteBox: return "WhiteBox";
  }
  return "?";
}

std::optional<QueryModality> parse_modality(std::string_view s) {
  for (auto m : {QueryModality::V, QueryModality::A, QueryModality::A2V, QueryModality::V2A,
                 QueryModality::AV}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

std::optional<CountTarget> parse_target(std::string_view s) {
  for (auto t : {CountTarget::Event, CountTarget::Object, CountTarget::Attribute}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::optional<Setting> parse_setting(std::string_view s) {
  for (auto v : {Setting::LongAcc, Setting::RefAcc, Setting::WhiteBox}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::size_t clue_cardinality(const ClueSet& clues) {
  struct Visitor {
    std::size_t operator()(const EventClues& c) const { return c.intervals.size(); }
    std::size_t operator()(const ObjectClues& c) const { return c.first_appearances.size(); }
    std::size_t operator()(const AttributeClues& c) const { return c.clusters.size(); }
  };
  return std::visit(Visitor{}, clues);
}

std::string normalize_frame_key(std::string_view key) {
  auto end = key.size();
  while (end > 0 && std::isspace(static_cast<unsigned char>(key[end - 1]))) --end;
  auto begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(key[begin - 1]))) --begin;
  if (begin == end) return std::string(key);
  while (begin + 1 < end && key[begin] == '0') ++begin;
  return std::string(key.substr(begin, end - begin));
}

namespace {

CountTarget target_of(const ClueSet& clues) {
  switch (clues.index()) {
    case 0: return CountTarget::Event;
    case 1: return CountTarget::Object;
    default: return CountTarget::Attribute;
  }
}

bool contains(const TimeInterval& outer, const TimeInterval& inner) {
  return outer.start_s <= inner.start_s && inner.end_s <= outer.end_s;
}

void check_frame_boxes(const std::vector<FrameBox>& boxes, const std::set<std::string>& frames,
                       const std::string& prefix, std::vector<Violation>& out) {
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto field = prefix + "[" + std::to_string(i) + "]";
    if (!is_valid(boxes[i].box)) {
      out.push_back({field + ".box", "box must be finite with min <= max"});
    }
    if (!frames.contains(boxes[i].frame_id)) {
      out.push_back({field + ".frame_id", "frame_id not listed in clue_frames"});
    }
  }
}

}  // namespace

std::vector<Violation> validate_question(const CountingQuestion& q) {
  std::vector<Violation> out;
  if (q.id.empty()) out.push_back({"id", "must be non-empty"});
  if (!is_valid(q.reference_interval)) {
    out.push_back({"reference_interval", "interval must be finite, non-negative, start <= end"});
  }
  if (q.gt_count < 0) out.push_back({"gt_count", "must be non-negative"});

  if (target_of(q.clues) != q.target) {
    out.push_back({"clues", "clue kind does not match target"});
    return out;
  }
  if (static_cast<std::int64_t>(clue_cardinality(q.clues)) != q.gt_count) {
    out.push_back({"gt_count", "count/clue mismatch"});
  }

  const std::set<std::string> frames(q.clue_frames.begin(), q.clue_frames.end());
  if (frames.size() != q.clue_frames.size()) {
    out.push_back({"clue_frames", "frame ids must be unique"});
  }

  if (const auto* ev = std::get_if<EventClues>(&q.clues)) {
    for (std::size_t i = 0; i < ev->intervals.size(); ++i) {
      const auto field = "clues[" + std::to_string(i) + "]";
      const auto& iv = ev->intervals[i];
      if (!is_valid(iv)) {
        out.push_back({field, "interval must be finite, non-negative, start <= end"});
      } else if (is_valid(q.reference_interval) && !contains(q.reference_interval, iv)) {
        out.push_back({field, "interval outside reference_interval"});
      }
    }
  } else if (const auto* obj = std::get_if<ObjectClues>(&q.clues)) {
    check_frame_boxes(obj->first_appearances, frames, "clues", out);
  } else if (const auto* attr = std::get_if<AttributeClues>(&q.clues)) {
    if (attr->clusters.empty()) out.push_back({"clues", "at least one cluster required"});
    for (const auto& [label, boxes] : attr->clusters) {
      const auto prefix = "clues." + label;
      if (boxes.empty()) out.push_back({prefix, "cluster must be non-empty"});
      check_frame_boxes(boxes, frames, prefix, out);
    }
  }
  return out;
}

}  // namespace avcount
