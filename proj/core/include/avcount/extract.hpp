#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "avcount/model.hpp"

namespace avcount {

// Parse-failure reason codes.
namespace reason {
inline constexpr std::string_view kNoInteger = "no-integer";
inline constexpr std::string_view kIntegerOverflow = "integer-overflow";
inline constexpr std::string_view kNoAnswerTag = "no-answer-tag";
inline constexpr std::string_view kFormat = "format";
}  // namespace reason

// Outcome of the tiered JSON recovery.
//   multiplier 1.0  the whole input parsed strictly
//   multiplier 0.5  a balanced {...} / [...] region inside the input parsed
//   multiplier 0.0  nothing parsed; `value` is empty
struct JsonRecovery {
  double multiplier{0.0};
  std::optional<nlohmann::json> value;
};

struct KeyCompleteness {
  double score{1.0};
  std::size_t n_complete{0};
  std::size_t n_total{0};
};

// What a JSON item must carry to count as complete. An object item needs every
// key in `keys`; when `arity` is non-zero an array item of exactly that length
// is accepted as the positional form of the same record.
struct ItemRequirement {
  std::vector<std::string> keys;
  std::size_t arity{0};

  static ItemRequirement event_pair() { return {{"start", "end"}, 2}; }
  static ItemRequirement box() { return {{"bbox"}, 4}; }
  static ItemRequirement labeled_box() { return {{"bbox", "label"}, 0}; }
};

// Content between the first `<tag>` and the last `</tag>`.
std::optional<std::string> extract_tagged(std::string_view text, std::string_view tag);

JsonRecovery recover_json(std::string_view text);

// Returns the [begin, end) offsets of every balanced bracket region, in order
// of their opening bracket. Brackets inside double-quoted strings are ignored.
std::vector<std::pair<std::size_t, std::size_t>> balanced_regions(std::string_view text);

KeyCompleteness key_completeness(const nlohmann::json& value, const ItemRequirement& req);

ParsedAnswer parse_count_answer(std::string_view text);
ParsedAnswer parse_event_answer(std::string_view text);
ParsedAnswer parse_object_answer(std::string_view text);
ParsedAnswer parse_attribute_answer(std::string_view text);

// A flat list of boxes, either as 4-number arrays or {"bbox": [...]} objects.
// Used by the spatial grounding reward. Returns the boxes or a failure reason.
struct BoxListAnswer {
  std::vector<BoundingBox> boxes;
  std::optional<std::string> failure;
};
BoxListAnswer parse_box_list_answer(std::string_view text);

}  // namespace avcount
