#include "avcount/whitebox.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "avcount/blackbox.hpp"
#include "avcount/extract.hpp"

namespace avcount {

double localization_accuracy(const MatchResult& match, std::size_t n_gt) {
  if (n_gt == 0) throw std::invalid_argument("localization_accuracy: empty ground truth");
  return match.total_iou / static_cast<double>(n_gt);
}

double counting_penalty(std::size_t n_pred, std::size_t n_gt) {
  if (n_gt == 0) throw std::invalid_argument("counting_penalty: empty ground truth");
  const double err = std::fabs(static_cast<double>(n_pred) - static_cast<double>(n_gt));
  return std::max(0.0, 1.0 - err / static_cast<double>(n_gt));
}

namespace {

struct KeyedBox {
  std::string frame;  // normalized frame key
  BoundingBox box;
};

double frame_gated_iou(const KeyedBox& pred, const KeyedBox& gt) {
  return pred.frame == gt.frame ? box_iou(pred.box, gt.box) : 0.0;
}

bool keyed_less(const KeyedBox& l, const KeyedBox& r) {
  return std::tie(l.frame, l.box.x_min, l.box.y_min, l.box.x_max, l.box.y_max) <
         std::tie(r.frame, r.box.x_min, r.box.y_min, r.box.x_max, r.box.y_max);
}

// Instances are matched in a canonical order so index tie-breaks cannot depend
// on the order a model listed them in.
void canonicalize(std::vector<KeyedBox>& boxes) {
  std::sort(boxes.begin(), boxes.end(), keyed_less);
}

std::vector<KeyedBox> keyed(const std::vector<FrameBox>& boxes) {
  std::vector<KeyedBox> out;
  out.reserve(boxes.size());
  for (const auto& fb : boxes) out.push_back({normalize_frame_key(fb.frame_id), fb.box});
  canonicalize(out);
  return out;
}

std::vector<TimeInterval> sorted_intervals(std::vector<TimeInterval> v) {
  std::sort(v.begin(), v.end(), [](const TimeInterval& l, const TimeInterval& r) {
    return std::tie(l.start_s, l.end_s) < std::tie(r.start_s, r.end_s);
  });
  return v;
}

// la from a greedy instance match, cap from the instance counts.
// An empty ground-truth cluster scores 1 when nothing is predicted and 0 otherwise.
ClusterScore score_cluster(const MatchResult& match, std::size_t n_pred, std::size_t n_gt) {
  ClusterScore c;
  c.n_pred = n_pred;
  c.n_gt = n_gt;
  if (n_gt == 0) {
    c.la = c.cap = n_pred == 0 ? 1.0 : 0.0;
  } else {
    c.la = localization_accuracy(match, n_gt);
    c.cap = counting_penalty(n_pred, n_gt);
  }
  c.score = std::sqrt(c.la * c.cap);
  return c;
}

WhiteBoxSampleResult format_failure(CountTarget target, const ParsedAnswer& pred) {
  WhiteBoxSampleResult r;
  r.target = target;
  r.format_ok = false;
  if (const auto* f = std::get_if<ParseFailure>(&pred)) {
    r.failure_reason = f->reason;
  } else {
    r.failure_reason = std::string(reason::kFormat);
  }
  return r;
}

double mean_wcs(const std::vector<ClusterScore>& clusters) {
  if (clusters.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : clusters) sum += c.score;
  return 100.0 * sum / static_cast<double>(clusters.size());
}

}  // namespace

WhiteBoxSampleResult score_event(const ParsedAnswer& pred, const EventClues& gt) {
  const auto* segs = std::get_if<EventSegments>(&pred);
  if (!segs) return format_failure(CountTarget::Event, pred);

  const auto preds = sorted_intervals(segs->segments);
  const auto gts = sorted_intervals(gt.intervals);
  const auto match = greedy_match(std::span<const TimeInterval>(preds),
                                  std::span<const TimeInterval>(gts),
                                  [](const TimeInterval& p, const TimeInterval& g) {
                                    return interval_iou(p, g);
                                  });
  WhiteBoxSampleResult r;
  r.target = CountTarget::Event;
  r.format_ok = true;
  r.per_cluster.push_back(score_cluster(match, segs->segments.size(), gt.intervals.size()));
  r.wcs = mean_wcs(r.per_cluster);
  return r;
}

WhiteBoxSampleResult score_object(const ParsedAnswer& pred, const ObjectClues& gt) {
  const auto* boxes = std::get_if<ObjectBoxes>(&pred);
  if (!boxes) return format_failure(CountTarget::Object, pred);

  std::vector<KeyedBox> preds;
  for (const auto& [frame, list] : boxes->by_frame) {
    for (const auto& b : list) preds.push_back({frame, b});
  }
  canonicalize(preds);
  const auto gts = keyed(gt.first_appearances);
  const auto match = greedy_match(std::span<const KeyedBox>(preds), std::span<const KeyedBox>(gts),
                                  frame_gated_iou);

  WhiteBoxSampleResult r;
  r.target = CountTarget::Object;
  r.format_ok = true;
  r.per_cluster.push_back(score_cluster(match, preds.size(), gts.size()));
  r.wcs = mean_wcs(r.per_cluster);
  return r;
}

WhiteBoxSampleResult score_attribute(const ParsedAnswer& pred, const AttributeClues& gt) {
  const auto* boxes = std::get_if<AttributeBoxes>(&pred);
  if (!boxes) return format_failure(CountTarget::Attribute, pred);

  std::map<std::string, std::vector<KeyedBox>> pred_clusters;
  for (const auto& [frame, list] : boxes->by_frame) {
    for (const auto& lb : list) pred_clusters[lb.label].push_back({frame, lb.box});
  }

  std::vector<std::string> pred_labels;
  std::vector<std::vector<KeyedBox>> pred_sets;
  for (auto& [label, set] : pred_clusters) {
    canonicalize(set);
    pred_labels.push_back(label);
    pred_sets.push_back(std::move(set));
  }
  std::vector<std::string> gt_labels;
  std::vector<std::vector<KeyedBox>> gt_sets;
  for (const auto& [label, set] : gt.clusters) {
    gt_labels.push_back(label);
    gt_sets.push_back(keyed(set));
  }

  // la for every (gt cluster, pred cluster) pairing, then a greedy cluster assignment on la.
  ScoreMatrix la(gt_sets.size(), pred_sets.size());
  std::vector<std::vector<MatchResult>> instance_matches(gt_sets.size());
  for (std::size_t g = 0; g < gt_sets.size(); ++g) {
    for (std::size_t p = 0; p < pred_sets.size(); ++p) {
      auto m = greedy_match(std::span<const KeyedBox>(pred_sets[p]),
                            std::span<const KeyedBox>(gt_sets[g]), frame_gated_iou);
      la(g, p) = gt_sets[g].empty() ? 0.0 : localization_accuracy(m, gt_sets[g].size());
      instance_matches[g].push_back(std::move(m));
    }
  }
  const auto assignment = greedy_match(la);

  WhiteBoxSampleResult r;
  r.target = CountTarget::Attribute;
  r.format_ok = true;
  r.per_cluster.resize(gt_sets.size());
  for (std::size_t g = 0; g < gt_sets.size(); ++g) {
    auto& c = r.per_cluster[g];
    c.label = gt_labels[g];
    c.n_gt = gt_sets[g].size();
  }
  for (const auto& pair : assignment.pairs) {
    auto c = score_cluster(instance_matches[pair.gt][pair.pred], pred_sets[pair.pred].size(),
                           gt_sets[pair.gt].size());
    c.label = gt_labels[pair.gt];
    c.matched_label = pred_labels[pair.pred];
    r.per_cluster[pair.gt] = std::move(c);
  }
  r.wcs = mean_wcs(r.per_cluster);
  return r;
}

WhiteBoxSampleResult evaluate_whitebox(const CountingQuestion& q, std::string_view text) {
  WhiteBoxSampleResult r;
  switch (q.target) {
    case CountTarget::Event: {
      const auto* clues = std::get_if<EventClues>(&q.clues);
      if (!clues) throw std::invalid_argument("question " + q.id + ": clues do not match target");
      r = score_event(parse_event_answer(text), *clues);
      break;
    }
    case CountTarget::Object: {
      const auto* clues = std::get_if<ObjectClues>(&q.clues);
      if (!clues) throw std::invalid_argument("question " + q.id + ": clues do not match target");
      r = score_object(parse_object_answer(text), *clues);
      break;
    }
    case CountTarget::Attribute: {
      const auto* clues = std::get_if<AttributeClues>(&q.clues);
      if (!clues) throw std::invalid_argument("question " + q.id + ": clues do not match target");
      r = score_attribute(parse_attribute_answer(text), *clues);
      break;
    }
  }
  r.sample_id = q.id;
  return r;
}

namespace {

WhiteBoxSummary summarize(const std::vector<const WhiteBoxSampleResult*>& rs) {
  WhiteBoxSummary s;
  s.n = rs.size();
  if (rs.empty()) return s;
  double wcs = 0.0;
  std::size_t ok = 0;
  for (const auto* r : rs) {
    wcs += r->format_ok ? r->wcs : 0.0;
    ok += r->format_ok ? 1 : 0;
  }
  s.wcs = wcs / static_cast<double>(rs.size());
  s.ifa = 100.0 * static_cast<double>(ok) / static_cast<double>(rs.size());
  return s;
}

}  // namespace

WhiteBoxReport aggregate_whitebox(const std::vector<WhiteBoxSampleResult>& results) {
  if (results.empty()) throw EmptyInputError("aggregate_whitebox: no samples");
  WhiteBoxReport report;
  std::vector<const WhiteBoxSampleResult*> all;
  std::map<std::string, std::vector<const WhiteBoxSampleResult*>> by_target;
  for (const auto& r : results) {
    all.push_back(&r);
    by_target[std::string(to_string(r.target))].push_back(&r);
  }
  report.overall = summarize(all);
  for (const auto& [target, members] : by_target) report.per_target[target] = summarize(members);
  return report;
}

nlohmann::json to_json(const WhiteBoxSampleResult& r) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : r.per_cluster) {
    clusters.push_back({{"label", c.label},
                        {"matched_label", c.matched_label},
                        {"la", c.la},
                        {"cap", c.cap},
                        {"score", c.score},
                        {"n_pred", c.n_pred},
                        {"n_gt", c.n_gt}});
  }
  nlohmann::json j = {{"sample_id", r.sample_id},
                      {"target", std::string(to_string(r.target))},
                      {"format_ok", r.format_ok},
                      {"per_cluster", clusters},
                      {"wcs", r.wcs}};
  if (!r.failure_reason.empty()) j["failure_reason"] = r.failure_reason;
  return j;
}

nlohmann::json to_json(const WhiteBoxReport& r) {
  nlohmann::json per_target = nlohmann::json::object();
  for (const auto& [t, s] : r.per_target) {
    per_target[t] = {{"n", s.n}, {"wcs", s.wcs}, {"ifa", s.ifa}};
  }
  return {{"n_samples", r.overall.n},
          {"wcs_mean", r.overall.wcs},
          {"ifa", r.overall.ifa},
          {"per_target", per_target}};
}

std::string format_table(const WhiteBoxReport& r) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-12s %7s %8s %8s\n", "target", "n", "WCS", "IFA");
  os << buf;
  auto row = [&](const std::string& label, const WhiteBoxSummary& s) {
    std::snprintf(buf, sizeof(buf), "%-12s %7zu %8.2f %8.2f\n", label.c_str(), s.n, s.wcs, s.ifa);
    os << buf;
  };
  row("overall", r.overall);
  for (const auto& [t, s] : r.per_target) row(t, s);
  return os.str();
}

}  // namespace avcount
