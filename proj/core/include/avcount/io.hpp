#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avcount/model.hpp"

namespace avcount {

using Json = nlohmann::json;

// Raised when a record does not match its declared schema. `line` is 1-based,
// 0 when the error is not tied to a file line.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& message, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

Json interval_to_json(const TimeInterval& t);
Json box_to_json(const BoundingBox& b);
TimeInterval interval_from_json(const Json& j);
BoundingBox box_from_json(const Json& j);

Json to_json(const CountingQuestion& q);
CountingQuestion question_from_json(const Json& j);

Json to_json(const RawModelOutput& r);
RawModelOutput raw_output_from_json(const Json& j);

// Calls `fn(record, line_number)` for every non-blank line. Parse failures and
// exceptions thrown by `fn` are rethrown as SchemaError tagged with the line.
void for_each_jsonl(std::istream& in, const std::function<void(const Json&, std::size_t)>& fn);

std::vector<CountingQuestion> read_questions(std::istream& in);
std::vector<RawModelOutput> read_raw_outputs(std::istream& in);

}  // namespace avcount
