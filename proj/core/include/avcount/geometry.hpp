#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "avcount/model.hpp"

namespace avcount {

double interval_iou(const TimeInterval& a, const TimeInterval& b);
double box_iou(const BoundingBox& a, const BoundingBox& b);

// Complete IoU: IoU minus the normalized center distance and an aspect-ratio
// consistency term. Lies in (-1.5, 1]; 1 only for identical boxes.
double box_ciou(const BoundingBox& a, const BoundingBox& b);

// Dense score table, rows indexed by ground truth and columns by prediction.
class ScoreMatrix {
 public:
  ScoreMatrix(std::size_t n_gt, std::size_t n_pred)
      : n_gt_(n_gt), n_pred_(n_pred), scores_(n_gt * n_pred, 0.0) {}

  std::size_t n_gt() const { return n_gt_; }
  std::size_t n_pred() const { return n_pred_; }
  double operator()(std::size_t gt, std::size_t pred) const { return scores_[gt * n_pred_ + pred]; }
  double& operator()(std::size_t gt, std::size_t pred) { return scores_[gt * n_pred_ + pred]; }

  template <typename Pred, typename Gt, typename Scorer>
  static ScoreMatrix build(std::span<const Pred> preds, std::span<const Gt> gts, Scorer&& score) {
    ScoreMatrix m(gts.size(), preds.size());
    for (std::size_t g = 0; g < gts.size(); ++g) {
      for (std::size_t p = 0; p < preds.size(); ++p) m(g, p) = score(preds[p], gts[g]);
    }
    return m;
  }

 private:
  std::size_t n_gt_;
  std::size_t n_pred_;
  std::vector<double> scores_;
};

struct MatchedPair {
  std::size_t gt{0};
  std::size_t pred{0};
  double score{0.0};
  bool operator==(const MatchedPair&) const = default;
};

struct MatchResult {
  std::vector<MatchedPair> pairs;
  std::vector<std::size_t> unmatched_gt;
  std::vector<std::size_t> unmatched_pred;
  double total_iou{0.0};
};

// Repeatedly takes the highest-scoring pair whose ground truth and prediction
// are both free. Ties go to the lower gt index, then the lower pred index.
// Zero-score pairs are still taken, so |pairs| == min(n_gt, n_pred).
MatchResult greedy_match(const ScoreMatrix& scores);

class MatchSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kBruteForceMaxSide = 8;

// Exhaustive search over all one-to-one assignments of the smaller side.
// Throws MatchSizeError when min(n_gt, n_pred) > kBruteForceMaxSide.
MatchResult optimal_match_bruteforce(const ScoreMatrix& scores);

template <typename Pred, typename Gt, typename Scorer>
MatchResult greedy_match(std::span<const Pred> preds, std::span<const Gt> gts, Scorer&& score) {
  return greedy_match(ScoreMatrix::build(preds, gts, std::forward<Scorer>(score)));
}

template <typename Pred, typename Gt, typename Scorer>
MatchResult optimal_match_bruteforce(std::span<const Pred> preds, std::span<const Gt> gts,
                                     Scorer&& score) {
  return optimal_match_bruteforce(ScoreMatrix::build(preds, gts, std::forward<Scorer>(score)));
}

}  // namespace avcount
