#include "avcount/blackbox.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace avcount {

namespace {

// |a - b| without signed overflow; exact for every int64 pair.
std::uint64_t abs_diff(std::int64_t a, std::int64_t b) {
  const auto ua = static_cast<std::uint64_t>(a);
  const auto ub = static_cast<std::uint64_t>(b);
  return a > b ? ua - ub : ub - ua;
}

}  // namespace

SampleScore score_sample(const ParsedAnswer& pred, std::int64_t gt_count, std::int64_t fallback) {
  if (const auto* c = std::get_if<CountAnswer>(&pred)) {
    const auto d = abs_diff(c->value, gt_count);
    return {d == 0, d <= 1, static_cast<double>(d)};
  }
  return {false, false, static_cast<double>(abs_diff(fallback, gt_count))};
}

std::string_view to_string(BreakdownDimension d) {
  switch (d) {
    case BreakdownDimension::Target: return "target";
    case BreakdownDimension::Modality: return "modality";
    case BreakdownDimension::CountRange: return "count_range";
  }
  return "?";
}

std::string CountRanges::bucket_of(std::int64_t gt_count) const {
  if (gt_count < 1) return "0";
  std::int64_t lower = 1;
  for (auto upper : upper_bounds) {
    if (gt_count <= upper) return std::to_string(lower) + "-" + std::to_string(upper);
    lower = upper + 1;
  }
  return ">" + std::to_string(upper_bounds.empty() ? 0 : upper_bounds.back());
}

std::vector<std::string> CountRanges::labels() const {
  std::vector<std::string> out;
  std::int64_t lower = 1;
  for (auto upper : upper_bounds) {
    out.push_back(std::to_string(lower) + "-" + std::to_string(upper));
    lower = upper + 1;
  }
  out.push_back(">" + std::to_string(upper_bounds.empty() ? 0 : upper_bounds.back()));
  return out;
}

MetricSummary summarize(const std::vector<const BlackBoxSample*>& samples) {
  MetricSummary m;
  m.n = samples.size();
  if (samples.empty()) return m;
  std::size_t correct = 0, near = 0;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (const auto* s : samples) {
    correct += s->score.correct ? 1 : 0;
    near += s->score.off_by_one ? 1 : 0;
    abs_sum += s->score.abs_err;
    sq_sum += s->score.abs_err * s->score.abs_err;
  }
  const double n = static_cast<double>(samples.size());
  m.acc = 100.0 * static_cast<double>(correct) / n;
  m.oboa = 100.0 * static_cast<double>(near) / n;
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  return m;
}

BlackBoxReport aggregate(const std::vector<BlackBoxSample>& samples,
                         const std::vector<BreakdownDimension>& dims, const CountRanges& ranges) {
  if (samples.empty()) throw EmptyInputError("aggregate: no samples");

  BlackBoxReport report;
  report.n_samples = samples.size();
  std::vector<const BlackBoxSample*> all;
  all.reserve(samples.size());
  for (const auto& s : samples) {
    all.push_back(&s);
    report.n_parse_failures += s.parse_failed ? 1 : 0;
  }
  report.overall = summarize(all);

  for (auto dim : dims) {
    std::map<std::string, std::vector<const BlackBoxSample*>> buckets;
    for (const auto* s : all) {
      std::string key;
      switch (dim) {
        case BreakdownDimension::Target: key = to_string(s->target); break;
        case BreakdownDimension::Modality: key = to_string(s->modality); break;
        case BreakdownDimension::CountRange: key = ranges.bucket_of(s->gt_count); break;
      }
      buckets[key].push_back(s);
    }
    auto& out = report.breakdowns[std::string(to_string(dim))];
    for (const auto& [key, members] : buckets) out[key] = summarize(members);
  }
  return report;
}

nlohmann::json to_json(const MetricSummary& m) {
  return {{"n", m.n}, {"acc", m.acc}, {"oboa", m.oboa}, {"mae", m.mae}, {"rmse", m.rmse}};
}

nlohmann::json to_json(const BlackBoxReport& r) {
  nlohmann::json breakdowns = nlohmann::json::object();
  for (const auto& [dim, buckets] : r.breakdowns) {
    auto& d = breakdowns[dim] = nlohmann::json::object();
    for (const auto& [bucket, m] : buckets) d[bucket] = to_json(m);
  }
  return {{"n_samples", r.n_samples},
          {"n_parse_failures", r.n_parse_failures},
          {"acc", r.overall.acc},
          {"oboa", r.overall.oboa},
          {"mae", r.overall.mae},
          {"rmse", r.overall.rmse},
          {"breakdowns", breakdowns}};
}

namespace {

std::string row(const std::string& label, const MetricSummary& m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-22s %7zu %8.2f %8.2f %8.3f %8.3f\n", label.c_str(), m.n,
                m.acc, m.oboa, m.mae, m.rmse);
  return buf;
}

}  // namespace

std::string format_table(const BlackBoxReport& r) {
  std::ostringstream os;
  char header[160];
  std::snprintf(header, sizeof(header), "%-22s %7s %8s %8s %8s %8s\n", "bucket", "n", "Acc",
                "OBOA", "MAE", "RMSE");
  os << header << row("overall", r.overall);
  for (const auto& [dim, buckets] : r.breakdowns) {
    for (const auto& [bucket, m] : buckets) os << row(dim + "/" + bucket, m);
  }
  os << "parse failures: " << r.n_parse_failures << " of " << r.n_samples << "\n";
  return os.str();
}

}  // namespace avcount
