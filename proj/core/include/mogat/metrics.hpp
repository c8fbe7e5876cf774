#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mogat {

/// counts[t * K + p]: samples of true class t predicted as p.
struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::size_t> counts;

  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts[truth * num_classes + predicted]; }
  std::size_t total() const;
  std::size_t true_positives(std::size_t k) const { return at(k, k); }
  std::size_t false_positives(std::size_t k) const;
  std::size_t false_negatives(std::size_t k) const;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t num_classes);

/// Percentage of correct predictions (trace / total * 100).
double accuracy(const ConfusionMatrix& cm);

struct MacroScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Unweighted means over all K classes of the per-class precision, recall
/// and F1. A ratio with a zero denominator counts as 0.
MacroScores macro_prf(const ConfusionMatrix& cm);

}  // namespace mogat
