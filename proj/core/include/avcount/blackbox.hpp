#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avcount/model.hpp"

namespace avcount {

struct SampleScore {
  bool correct{false};
  bool off_by_one{false};
  double abs_err{0.0};
};

// Parse failures (and any non-count answer) are wrong and are charged
// |fallback - gt| so they still enter MAE and RMSE.
SampleScore score_sample(const ParsedAnswer& pred, std::int64_t gt_count,
                         std::int64_t fallback = 0);

struct BlackBoxSample {
  std::string sample_id;
  CountTarget target{CountTarget::Event};
  QueryModality modality{QueryModality::V};
  std::int64_t gt_count{0};
  std::optional<std::int64_t> predicted;
  bool parse_failed{false};
  SampleScore score;
};

enum class BreakdownDimension { Target, Modality, CountRange };
std::string_view to_string(BreakdownDimension d);

// Upper bounds of the count-range buckets; the last bucket is open-ended.
// The default {5, 10, 20} yields "1-5", "6-10", "11-20", ">20".
struct CountRanges {
  std::vector<std::int64_t> upper_bounds{5, 10, 20};
  std::string bucket_of(std::int64_t gt_count) const;
  std::vector<std::string> labels() const;
};

struct MetricSummary {
  std::size_t n{0};
  double acc{0.0};   // percent
  double oboa{0.0};  // percent
  double mae{0.0};
  double rmse{0.0};
};

struct BlackBoxReport {
  std::size_t n_samples{0};
  std::size_t n_parse_failures{0};
  MetricSummary overall;
  std::map<std::string, std::map<std::string, MetricSummary>> breakdowns;
};

class EmptyInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

MetricSummary summarize(const std::vector<const BlackBoxSample*>& samples);

// Throws EmptyInputError for an empty sample list.
BlackBoxReport aggregate(const std::vector<BlackBoxSample>& samples,
                         const std::vector<BreakdownDimension>& dims =
                             {BreakdownDimension::Target, BreakdownDimension::Modality,
                              BreakdownDimension::CountRange},
                         const CountRanges& ranges = {});

nlohmann::json to_json(const MetricSummary& m);
nlohmann::json to_json(const BlackBoxReport& r);
std::string format_table(const BlackBoxReport& r);

}  // namespace avcount
