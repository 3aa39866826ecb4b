#include "avcount/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace avcount {

double interval_iou(const TimeInterval& a, const TimeInterval& b) {
  const double inter = std::max(0.0, std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s));
  const double uni = a.length() + b.length() - inter;
  if (uni <= 0.0) return a == b ? 1.0 : 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double ih = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = iw * ih;
  const double uni = a.width() * a.height() + b.width() * b.height() - inter;
  if (uni <= 0.0) return a == b ? 1.0 : 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace {

double aspect_angle(double w, double h) {
  return h > 0.0 ? std::atan(w / h) : std::numbers::pi / 2.0;
}

// Summation order is fixed so equal assignments give bit-identical totals.
double total_in_gt_order(const std::vector<MatchedPair>& pairs, std::size_t n_gt) {
  std::vector<double> by_gt(n_gt, 0.0);
  for (const auto& pr : pairs) by_gt[pr.gt] = pr.score;
  double total = 0.0;
  for (double s : by_gt) total += s;
  return total;
}

}  // namespace

double box_ciou(const BoundingBox& a, const BoundingBox& b) {
  const double iou = box_iou(a, b);

  const double dx = (a.x_min + a.x_max - b.x_min - b.x_max) / 2.0;
  const double dy = (a.y_min + a.y_max - b.y_min - b.y_max) / 2.0;
  const double cw = std::max(a.x_max, b.x_max) - std::min(a.x_min, b.x_min);
  const double ch = std::max(a.y_max, b.y_max) - std::min(a.y_min, b.y_min);
  const double diag2 = cw * cw + ch * ch;
  const double distance_term = diag2 > 0.0 ? (dx * dx + dy * dy) / diag2 : 0.0;

  const double angle = aspect_angle(b.width(), b.height()) - aspect_angle(a.width(), a.height());
  const double v = 4.0 / (std::numbers::pi * std::numbers::pi) * angle * angle;
  const double denom = (1.0 - iou) + v;
  const double alpha = denom > 0.0 ? v / denom : 0.0;

  return iou - distance_term - alpha * v;
}

MatchResult greedy_match(const ScoreMatrix& scores) {
  struct Candidate {
    double score;
    std::size_t gt;
    std::size_t pred;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(scores.n_gt() * scores.n_pred());
  for (std::size_t g = 0; g < scores.n_gt(); ++g) {
    for (std::size_t p = 0; p < scores.n_pred(); ++p) candidates.push_back({scores(g, p), g, p});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& l, const Candidate& r) {
    if (l.score != r.score) return l.score > r.score;
    if (l.gt != r.gt) return l.gt < r.gt;
    return l.pred < r.pred;
  });

  std::vector<bool> gt_used(scores.n_gt(), false);
  std::vector<bool> pred_used(scores.n_pred(), false);
  const std::size_t limit = std::min(scores.n_gt(), scores.n_pred());

  MatchResult out;
  for (const auto& c : candidates) {
    if (out.pairs.size() == limit) break;
    if (gt_used[c.gt] || pred_used[c.pred]) continue;
    gt_used[c.gt] = true;
    pred_used[c.pred] = true;
    out.pairs.push_back({c.gt, c.pred, c.score});
  }
  out.total_iou = total_in_gt_order(out.pairs, scores.n_gt());
  for (std::size_t g = 0; g < scores.n_gt(); ++g) {
    if (!gt_used[g]) out.unmatched_gt.push_back(g);
  }
  for (std::size_t p = 0; p < scores.n_pred(); ++p) {
    if (!pred_used[p]) out.unmatched_pred.push_back(p);
  }
  return out;
}

namespace {

struct Search {
  const ScoreMatrix& scores;
  bool gt_is_small;
  std::size_t n_small;
  std::size_t n_large;
  std::vector<std::size_t> current;
  std::vector<bool> used;
  std::vector<std::size_t> best;
  double best_total{-1.0};

  // Leaf totals are summed in gt order, the same order MatchResult uses.
  double leaf_total() const {
    std::vector<double> by_gt(scores.n_gt(), 0.0);
    for (std::size_t i = 0; i < n_small; ++i) {
      if (gt_is_small) {
        by_gt[i] = scores(i, current[i]);
      } else {
        by_gt[current[i]] = scores(current[i], i);
      }
    }
    double total = 0.0;
    for (double s : by_gt) total += s;
    return total;
  }

  void run(std::size_t depth) {
    if (depth == n_small) {
      const double total = leaf_total();
      if (total > best_total) {
        best_total = total;
        best = current;
      }
      return;
    }
    for (std::size_t j = 0; j < n_large; ++j) {
      if (used[j]) continue;
      used[j] = true;
      current[depth] = j;
      run(depth + 1);
      used[j] = false;
    }
  }
};

}  // namespace

MatchResult optimal_match_bruteforce(const ScoreMatrix& scores) {
  const bool gt_is_small = scores.n_gt() <= scores.n_pred();
  const std::size_t n_small = gt_is_small ? scores.n_gt() : scores.n_pred();
  const std::size_t n_large = gt_is_small ? scores.n_pred() : scores.n_gt();
  if (n_small > kBruteForceMaxSide) {
    throw MatchSizeError("brute-force matching refuses min side " + std::to_string(n_small) +
                         " > " + std::to_string(kBruteForceMaxSide));
  }
  double assignments = 1.0;
  for (std::size_t i = 0; i < n_small; ++i) assignments *= static_cast<double>(n_large - i);
  if (assignments > 5e7) {
    throw MatchSizeError("brute-force matching refuses " + std::to_string(assignments) +
                         " assignments");
  }

  Search search{scores, gt_is_small, n_small, n_large, std::vector<std::size_t>(n_small),
                std::vector<bool>(n_large, false), {}, -1.0};
  search.run(0);

  MatchResult out;
  std::vector<bool> gt_used(scores.n_gt(), false);
  std::vector<bool> pred_used(scores.n_pred(), false);
  for (std::size_t i = 0; i < n_small; ++i) {
    const std::size_t g = gt_is_small ? i : search.best[i];
    const std::size_t p = gt_is_small ? search.best[i] : i;
    gt_used[g] = pred_used[p] = true;
    out.pairs.push_back({g, p, scores(g, p)});
  }
  out.total_iou = total_in_gt_order(out.pairs, scores.n_gt());
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const MatchedPair& l, const MatchedPair& r) { return l.gt < r.gt; });
  for (std::size_t g = 0; g < scores.n_gt(); ++g) {
    if (!gt_used[g]) out.unmatched_gt.push_back(g);
  }
  for (std::size_t p = 0; p < scores.n_pred(); ++p) {
    if (!pred_used[p]) out.unmatched_pred.push_back(p);
  }
  return out;
}

}  // namespace avcount
