#include "avcount/io.hpp"

#include <cmath>

namespace avcount {

namespace {

const Json& require(const Json& j, const char* key) {
  if (!j.is_object()) throw SchemaError("expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const Json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw SchemaError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

double require_number(const Json& j, const char* what) {
  if (!j.is_number()) throw SchemaError(std::string(what) + " must be numeric");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(std::string(what) + " must be finite");
  return v;
}

FrameBox frame_box_from_json(const Json& j) {
  return {require_string(j, "frame_id"), box_from_json(require(j, "box"))};
}

Json frame_box_to_json(const FrameBox& fb) {
  return Json{{"frame_id", fb.frame_id}, {"box", box_to_json(fb.box)}};
}

}  // namespace

Json interval_to_json(const TimeInterval& t) { return Json::array({t.start_s, t.end_s}); }

Json box_to_json(const BoundingBox& b) {
  return Json::array({b.x_min, b.y_min, b.x_max, b.y_max});
}

TimeInterval interval_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw SchemaError("interval must be [start_s, end_s]");
  return {require_number(j[0], "interval bound"), require_number(j[1], "interval bound")};
}

BoundingBox box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw SchemaError("box must be [x_min, y_min, x_max, y_max]");
  }
  return {require_number(j[0], "box coordinate"), require_number(j[1], "box coordinate"),
          require_number(j[2], "box coordinate"), require_number(j[3], "box coordinate")};
}

Json to_json(const CountingQuestion& q) {
  Json clues;
  if (const auto* ev = std::get_if<EventClues>(&q.clues)) {
    clues = Json::array();
    for (const auto& iv : ev->intervals) clues.push_back(interval_to_json(iv));
  } else if (const auto* obj = std::get_if<ObjectClues>(&q.clues)) {
    clues = Json::array();
    for (const auto& fb : obj->first_appearances) clues.push_back(frame_box_to_json(fb));
  } else {
    clues = Json::object();
    for (const auto& [label, boxes] : std::get<AttributeClues>(q.clues).clusters) {
      auto& arr = clues[label] = Json::array();
      for (const auto& fb : boxes) arr.push_back(frame_box_to_json(fb));
    }
  }
  return Json{{"id", q.id},
              {"video_id", q.video_id},
              {"question", q.question},
              {"modality", std::string(to_string(q.modality))},
              {"target", std::string(to_string(q.target))},
              {"reference_interval", interval_to_json(q.reference_interval)},
              {"gt_count", q.gt_count},
              {"clues", clues},
              {"clue_frames", q.clue_frames}};
}

CountingQuestion question_from_json(const Json& j) {
  CountingQuestion q;
  q.id = require_string(j, "id");
  q.video_id = require_string(j, "video_id");
  q.question = require_string(j, "question");

  const auto modality = require_string(j, "modality");
  auto m = parse_modality(modality);
  if (!m) throw SchemaError("unknown modality '" + modality + "'");
  q.modality = *m;

  const auto target = require_string(j, "target");
  auto t = parse_target(target);
  if (!t) throw SchemaError("unknown target '" + target + "'");
  q.target = *t;

  q.reference_interval = interval_from_json(require(j, "reference_interval"));

  const auto& gt = require(j, "gt_count");
  if (!gt.is_number_integer()) throw SchemaError("gt_count must be an integer");
  q.gt_count = gt.get<std::int64_t>();

  const auto& clues = require(j, "clues");
  switch (q.target) {
    case CountTarget::Event: {
      if (!clues.is_array()) throw SchemaError("event clues must be an array of intervals");
      EventClues ev;
      for (const auto& c : clues) ev.intervals.push_back(interval_from_json(c));
      q.clues = std::move(ev);
      break;
    }
    case CountTarget::Object: {
      if (!clues.is_array()) throw SchemaError("object clues must be an array");
      ObjectClues obj;
      for (const auto& c : clues) obj.first_appearances.push_back(frame_box_from_json(c));
      q.clues = std::move(obj);
      break;
    }
    case CountTarget::Attribute: {
      if (!clues.is_object()) throw SchemaError("attribute clues must map label -> boxes");
      AttributeClues attr;
      for (const auto& [label, boxes] : clues.items()) {
        if (!boxes.is_array()) throw SchemaError("attribute cluster must be an array");
        auto& cluster = attr.clusters[label];
        for (const auto& c : boxes) cluster.push_back(frame_box_from_json(c));
      }
      q.clues = std::move(attr);
      break;
    }
  }

  if (auto it = j.find("clue_frames"); it != j.end()) {
    if (!it->is_array()) throw SchemaError("clue_frames must be an array of strings");
    for (const auto& f : *it) {
      if (!f.is_string()) throw SchemaError("clue_frames must be an array of strings");
      q.clue_frames.push_back(f.get<std::string>());
    }
  }
  return q;
}

Json to_json(const RawModelOutput& r) {
  return Json{{"sample_id", r.sample_id},
              {"setting", std::string(to_string(r.setting))},
              {"text", r.text}};
}

RawModelOutput raw_output_from_json(const Json& j) {
  RawModelOutput r;
  r.sample_id = require_string(j, "sample_id");
  const auto setting = require_string(j, "setting");
  auto s = parse_setting(setting);
  if (!s) throw SchemaError("unknown setting '" + setting + "'");
  r.setting = *s;
  r.text = require_string(j, "text");
  return r;
}

void for_each_jsonl(std::istream& in, const std::function<void(const Json&, std::size_t)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json record = Json::parse(line, nullptr, false);
    if (record.is_discarded()) throw SchemaError("malformed JSON", line_no);
    try {
      fn(record, line_no);
    } catch (const SchemaError& e) {
      if (e.line() != 0) throw;
      throw SchemaError(e.what(), line_no);
    } catch (const Json::exception& e) {
      throw SchemaError(e.what(), line_no);
    }
  }
}

std::vector<CountingQuestion> read_questions(std::istream& in) {
  std::vector<CountingQuestion> out;
  for_each_jsonl(in, [&](const Json& j, std::size_t) { out.push_back(question_from_json(j)); });
  return out;
}

std::vector<RawModelOutput> read_raw_outputs(std::istream& in) {
  std::vector<RawModelOutput> out;
  for_each_jsonl(in, [&](const Json& j, std::size_t) { out.push_back(raw_output_from_json(j)); });
  return out;
}

}  // namespace avcount
