#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace avcount {

// A closed time span in seconds.
struct TimeInterval {
  double start_s{0.0};
  double end_s{0.0};

  double length() const { return end_s - start_s; }
  bool operator==(const TimeInterval&) const = default;
};

// Axis-aligned box in unnormalized pixel coordinates.
struct BoundingBox {
  double x_min{0.0};
  double y_min{0.0};
  double x_max{0.0};
  double y_max{0.0};

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool operator==(const BoundingBox&) const = default;
};

bool is_valid(const TimeInterval& t);
bool is_valid(const BoundingBox& b);

enum class QueryModality { V, A, A2V, V2A, AV };
enum class CountTarget { Event, Object, Attribute };
enum class Setting { LongAcc, RefAcc, WhiteBox };

std::string_view to_string(QueryModality m);
std::string_view to_string(CountTarget t);
std::string_view to_string(Setting s);
std::optional<QueryModality> parse_modality(std::string_view s);
std::optional<CountTarget> parse_target(std::string_view s);
std::optional<Setting> parse_setting(std::string_view s);

struct FrameBox {
  std::string frame_id;
  BoundingBox box;
  bool operator==(const FrameBox&) const = default;
};

struct EventClues {
  std::vector<TimeInterval> intervals;
  bool operator==(const EventClues&) const = default;
};

struct ObjectClues {
  std::vector<FrameBox> first_appearances;
  bool operator==(const ObjectClues&) const = default;
};

struct AttributeClues {
  std::map<std::string, std::vector<FrameBox>> clusters;
  bool operator==(const AttributeClues&) const = default;
};

using ClueSet = std::variant<EventClues, ObjectClues, AttributeClues>;

// Number of countable units the clues describe: intervals, boxes or clusters.
std::size_t clue_cardinality(const ClueSet& clues);

struct CountingQuestion {
  std::string id;
  std::string video_id;
  std::string question;
  QueryModality modality{QueryModality::V};
  CountTarget target{CountTarget::Event};
  TimeInterval reference_interval;
  std::int64_t gt_count{0};
  ClueSet clues;
  std::vector<std::string> clue_frames;

  bool operator==(const CountingQuestion&) const = default;
};

struct Violation {
  std::string field;
  std::string rule;
  bool operator==(const Violation&) const = default;
};

// Returns every broken invariant of `q`; an empty list means the question is consistent.
std::vector<Violation> validate_question(const CountingQuestion& q);

// Frame keys are compared by their trailing digit run, so "Frame1", "Frame 1"
// and "frame01" all normalize to "1". Keys without digits are kept verbatim.
std::string normalize_frame_key(std::string_view key);

// ---- parsed model answers ----

struct CountAnswer {
  std::int64_t value{0};
  bool operator==(const CountAnswer&) const = default;
};

struct EventSegments {
  std::vector<TimeInterval> segments;
  bool operator==(const EventSegments&) const = default;
};

// Keyed by normalized frame key.
struct ObjectBoxes {
  std::map<std::string, std::vector<BoundingBox>> by_frame;
  bool operator==(const ObjectBoxes&) const = default;
};

struct LabeledBox {
  BoundingBox box;
  std::string label;
  bool operator==(const LabeledBox&) const = default;
};

struct AttributeBoxes {
  std::map<std::string, std::vector<LabeledBox>> by_frame;
  // Items dropped for missing or malformed "bbox"/"label".
  std::size_t dropped_items{0};
  bool operator==(const AttributeBoxes&) const = default;
};

struct ParseFailure {
  std::string reason;
  bool operator==(const ParseFailure&) const = default;
};

using ParsedAnswer =
    std::variant<CountAnswer, EventSegments, ObjectBoxes, AttributeBoxes, ParseFailure>;

inline bool is_failure(const ParsedAnswer& a) { return std::holds_alternative<ParseFailure>(a); }

struct RawModelOutput {
  std::string sample_id;
  Setting setting{Setting::LongAcc};
  std::string text;
  bool operator==(const RawModelOutput&) const = default;
};

}  // namespace avcount
