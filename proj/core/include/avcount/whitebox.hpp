#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "avcount/geometry.hpp"
#include "avcount/model.hpp"

namespace avcount {

struct ClusterScore {
  std::string label;  // ground-truth cluster label; empty for event/object targets
  std::string matched_label;
  double la{0.0};
  double cap{0.0};
  double score{0.0};  // sqrt(la * cap)
  std::size_t n_pred{0};
  std::size_t n_gt{0};
};

struct WhiteBoxSampleResult {
  std::string sample_id;
  CountTarget target{CountTarget::Event};
  bool format_ok{false};
  std::string failure_reason;
  std::vector<ClusterScore> per_cluster;
  double wcs{0.0};  // 0..100
};

// Mean matched IoU over ground-truth instances; unmatched ones contribute 0.
// Throws std::invalid_argument when n_gt == 0.
double localization_accuracy(const MatchResult& match, std::size_t n_gt);

// max(0, 1 - |n_pred - n_gt| / n_gt). Throws std::invalid_argument when n_gt == 0.
double counting_penalty(std::size_t n_pred, std::size_t n_gt);

WhiteBoxSampleResult score_event(const ParsedAnswer& pred, const EventClues& gt);
WhiteBoxSampleResult score_object(const ParsedAnswer& pred, const ObjectClues& gt);
WhiteBoxSampleResult score_attribute(const ParsedAnswer& pred, const AttributeClues& gt);

// Parses `text` with the parser for the question's target and scores it.
WhiteBoxSampleResult evaluate_whitebox(const CountingQuestion& q, std::string_view text);

struct WhiteBoxSummary {
  std::size_t n{0};
  double wcs{0.0};
  double ifa{0.0};
};

struct WhiteBoxReport {
  WhiteBoxSummary overall;
  std::map<std::string, WhiteBoxSummary> per_target;
};

// Throws EmptyInputError (see blackbox.hpp) on empty input.
WhiteBoxReport aggregate_whitebox(const std::vector<WhiteBoxSampleResult>& results);

nlohmann::json to_json(const WhiteBoxSampleResult& r);
nlohmann::json to_json(const WhiteBoxReport& r);
std::string format_table(const WhiteBoxReport& r);

}  // namespace avcount
