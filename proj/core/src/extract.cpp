#include "avcount/extract.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace avcount {

using nlohmann::json;

namespace {

std::optional<json> parse_strict(std::string_view text) {
  json v = json::parse(text.begin(), text.end(), nullptr, false);
  if (v.is_discarded()) return std::nullopt;
  return v;
}

// End offset (exclusive) of the balanced region opening at `begin`, if any.
std::optional<std::size_t> balanced_region_at(std::string_view text, std::size_t begin) {
  std::vector<char> stack;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = begin; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    switch (c) {
      case '"': in_string = true; break;
      case '{': stack.push_back('}'); break;
      case '[': stack.push_back(']'); break;
      case '}':
      case ']':
        if (stack.empty() || stack.back() != c) return std::nullopt;
        stack.pop_back();
        if (stack.empty()) return i + 1;
        break;
      default: break;
    }
  }
  return std::nullopt;
}

// Rewrites single-quoted strings as double-quoted ones. Some answer templates
// show keys such as 'label', which strict JSON rejects.
std::string requote_single_quoted(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 8);
  enum class State { Plain, Double, Single } state = State::Plain;
  bool escaped = false;
  for (const char c : text) {
    switch (state) {
      case State::Plain:
        if (c == '"') state = State::Double;
        if (c == '\'') {
          state = State::Single;
          out.push_back('"');
          continue;
        }
        out.push_back(c);
        break;
      case State::Double:
        out.push_back(c);
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          state = State::Plain;
        }
        break;
      case State::Single:
        if (escaped) {
          escaped = false;
          if (c == '\'') {
            out.back() = '\'';
            continue;
          }
          out.push_back(c);
        } else if (c == '\\') {
          escaped = true;
          out.push_back(c);
        } else if (c == '\'') {
          state = State::Plain;
          out.push_back('"');
        } else if (c == '"') {
          out += "\\\"";
        } else {
          out.push_back(c);
        }
        break;
    }
  }
  return out;
}

// Candidates in order: the whole text, then each balanced region, each tried
// as is and with single-quoted strings requoted. The first candidate of the
// expected JSON type wins.
std::optional<json> parse_answer_json(std::string_view text, json::value_t expected) {
  const bool has_single = text.find('\'') != std::string_view::npos;
  auto attempt = [&](std::string_view candidate) -> std::optional<json> {
    auto v = parse_strict(candidate);
    if (!v && has_single) v = parse_strict(requote_single_quoted(candidate));
    if (v && v->type() == expected) return v;
    return std::nullopt;
  };
  if (auto v = attempt(text)) return v;
  for (const auto& [b, e] : balanced_regions(text)) {
    if (auto v = attempt(text.substr(b, e - b))) return v;
  }
  return std::nullopt;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Numbers may arrive as JSON numbers or as numeric strings ("12.50").
std::optional<double> as_number(const json& v) {
  double out = 0.0;
  if (v.is_number()) {
    out = v.get<double>();
  } else if (v.is_string()) {
    const auto s = trim(v.get_ref<const std::string&>());
    if (s.empty()) return std::nullopt;
    auto first = s.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  } else {
    return std::nullopt;
  }
  if (!std::isfinite(out)) return std::nullopt;
  return out;
}

std::optional<BoundingBox> as_box(const json& v) {
  if (!v.is_array() || v.size() != 4) return std::nullopt;
  std::array<double, 4> c{};
  for (std::size_t i = 0; i < 4; ++i) {
    auto n = as_number(v[i]);
    if (!n) return std::nullopt;
    c[i] = *n;
  }
  return BoundingBox{std::min(c[0], c[2]), std::min(c[1], c[3]), std::max(c[0], c[2]),
                     std::max(c[1], c[3])};
}

std::optional<TimeInterval> as_interval(const json& item) {
  std::optional<double> a, b;
  if (item.is_array() && item.size() == 2) {
    a = as_number(item[0]);
    b = as_number(item[1]);
  } else if (item.is_object() && item.contains("start") && item.contains("end")) {
    a = as_number(item["start"]);
    b = as_number(item["end"]);
  }
  if (!a || !b || *a < 0.0 || *b < 0.0) return std::nullopt;
  return TimeInterval{std::min(*a, *b), std::max(*a, *b)};
}

ParseFailure failure(std::string_view code) { return ParseFailure{std::string(code)}; }

}  // namespace

std::optional<std::string> extract_tagged(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const auto p = text.find(open);
  if (p == std::string_view::npos) return std::nullopt;
  const auto q = text.rfind(close);
  const auto content_begin = p + open.size();
  if (q == std::string_view::npos || q < content_begin) return std::nullopt;
  return std::string(text.substr(content_begin, q - content_begin));
}

std::vector<std::pair<std::size_t, std::size_t>> balanced_regions(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{' && text[i] != '[') continue;
    if (auto end = balanced_region_at(text, i)) out.emplace_back(i, *end);
  }
  return out;
}

JsonRecovery recover_json(std::string_view text) {
  if (auto v = parse_strict(text)) return {1.0, std::move(v)};
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{' && text[i] != '[') continue;
    auto end = balanced_region_at(text, i);
    if (!end) continue;
    if (auto v = parse_strict(text.substr(i, *end - i))) return {0.5, std::move(v)};
  }
  return {};
}

KeyCompleteness key_completeness(const json& value, const ItemRequirement& req) {
  auto complete = [&](const json& item) {
    if (item.is_object()) {
      return std::all_of(req.keys.begin(), req.keys.end(),
                         [&](const std::string& k) { return item.contains(k); });
    }
    return req.arity > 0 && item.is_array() && item.size() == req.arity;
  };

  KeyCompleteness out;
  if (value.is_array()) {
    out.n_total = value.size();
    for (const auto& item : value) out.n_complete += complete(item) ? 1 : 0;
  } else {
    out.n_total = 1;
    out.n_complete = complete(value) ? 1 : 0;
  }
  out.score = out.n_total == 0 ? 1.0
                               : static_cast<double>(out.n_complete) /
                                     static_cast<double>(out.n_total);
  return out;
}

ParsedAnswer parse_count_answer(std::string_view text) {
  std::string body;
  if (auto answer = extract_tagged(text, "answer")) {
    body = std::move(*answer);
  } else {
    // Reasoning text may mention other numbers; only look past it.
    const auto think_end = text.rfind("</think>");
    body = think_end == std::string_view::npos ? std::string(text)
                                               : std::string(text.substr(think_end + 8));
  }

  const auto it = std::find_if(body.begin(), body.end(),
                               [](unsigned char c) { return std::isdigit(c); });
  if (it == body.end()) return failure(reason::kNoInteger);
  auto begin = static_cast<std::size_t>(it - body.begin());
  auto end = begin;
  while (end < body.size() && std::isdigit(static_cast<unsigned char>(body[end]))) ++end;
  if (begin > 0 && body[begin - 1] == '-' &&
      (begin == 1 || !std::isalnum(static_cast<unsigned char>(body[begin - 2])))) {
    --begin;
  }

  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(body.data() + begin, body.data() + end, value);
  if (ec == std::errc::result_out_of_range) return failure(reason::kIntegerOverflow);
  if (ec != std::errc{}) return failure(reason::kNoInteger);
  return CountAnswer{value};
}

ParsedAnswer parse_event_answer(std::string_view text) {
  auto answer = extract_tagged(text, "answer");
  if (!answer) return failure(reason::kNoAnswerTag);
  auto doc = parse_answer_json(*answer, json::value_t::array);
  if (!doc) return failure(reason::kFormat);

  EventSegments out;
  out.segments.reserve(doc->size());
  for (const auto& item : *doc) {
    auto iv = as_interval(item);
    if (!iv) return failure(reason::kFormat);
    out.segments.push_back(*iv);
  }
  return out;
}

ParsedAnswer parse_object_answer(std::string_view text) {
  auto answer = extract_tagged(text, "answer");
  if (!answer) return failure(reason::kNoAnswerTag);
  auto doc = parse_answer_json(*answer, json::value_t::object);
  if (!doc) return failure(reason::kFormat);

  ObjectBoxes out;
  for (const auto& [key, boxes] : doc->items()) {
    if (!boxes.is_array()) return failure(reason::kFormat);
    auto& frame = out.by_frame[normalize_frame_key(key)];
    for (const auto& b : boxes) {
      auto box = as_box(b);
      if (!box) return failure(reason::kFormat);
      frame.push_back(*box);
    }
  }
  return out;
}

ParsedAnswer parse_attribute_answer(std::string_view text) {
  auto answer = extract_tagged(text, "answer");
  if (!answer) return failure(reason::kNoAnswerTag);
  auto doc = parse_answer_json(*answer, json::value_t::object);
  if (!doc) return failure(reason::kFormat);

  AttributeBoxes out;
  for (const auto& [key, items] : doc->items()) {
    if (!items.is_array()) return failure(reason::kFormat);
    auto& frame = out.by_frame[normalize_frame_key(key)];
    for (const auto& item : items) {
      std::optional<BoundingBox> box;
      std::optional<std::string> label;
      if (item.is_object()) {
        if (auto it = item.find("bbox"); it != item.end()) box = as_box(*it);
        if (auto it = item.find("label"); it != item.end()) {
          if (it->is_string()) {
            label = it->get<std::string>();
          } else if (it->is_number()) {
            label = it->dump();
          }
        }
      }
      if (!box || !label) {
        ++out.dropped_items;
        continue;
      }
      frame.push_back({*box, std::move(*label)});
    }
  }
  return out;
}

BoxListAnswer parse_box_list_answer(std::string_view text) {
  BoxListAnswer out;
  auto answer = extract_tagged(text, "answer");
  if (!answer) {
    out.failure = std::string(reason::kNoAnswerTag);
    return out;
  }
  auto doc = parse_answer_json(*answer, json::value_t::array);
  if (!doc) {
    out.failure = std::string(reason::kFormat);
    return out;
  }
  for (const auto& item : *doc) {
    std::optional<BoundingBox> box;
    if (item.is_object()) {
      if (auto it = item.find("bbox"); it != item.end()) box = as_box(*it);
    } else {
      box = as_box(item);
    }
    if (!box) {
      out.boxes.clear();
      out.failure = std::string(reason::kFormat);
      return out;
    }
    out.boxes.push_back(*box);
  }
  return out;
}

}  // namespace avcount
