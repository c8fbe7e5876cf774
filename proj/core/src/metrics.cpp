#include "mogat/metrics.hpp"

#include "mogat/error.hpp"

namespace mogat {

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (std::size_t c : counts) n += c;
  return n;
}

std::size_t ConfusionMatrix::false_positives(std::size_t k) const {
  std::size_t column = 0;
  for (std::size_t t = 0; t < num_classes; ++t) column += at(t, k);
  return column - at(k, k);
}

std::size_t ConfusionMatrix::false_negatives(std::size_t k) const {
  std::size_t row = 0;
  for (std::size_t p = 0; p < num_classes; ++p) row += at(k, p);
  return row - at(k, k);
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t num_classes) {
  if (y_true.size() != y_pred.size()) throw ShapeError("confusion: label and prediction counts differ");
  if (y_true.empty()) throw ConfigError("confusion: no samples");
  if (num_classes == 0) throw ConfigError("confusion: no classes");
  ConfusionMatrix cm{num_classes, std::vector<std::size_t>(num_classes * num_classes, 0)};
  const auto k = static_cast<int>(num_classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] >= k || y_pred[i] < 0 || y_pred[i] >= k)
      throw ConfigError("confusion: class index out of range at sample " + std::to_string(i));
    ++cm.counts[static_cast<std::size_t>(y_true[i]) * num_classes + static_cast<std::size_t>(y_pred[i])];
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::size_t n = cm.total();
  if (n == 0) throw ConfigError("accuracy: empty confusion matrix");
  std::size_t correct = 0;
  for (std::size_t k = 0; k < cm.num_classes; ++k) correct += cm.at(k, k);
  return 100.0 * static_cast<double>(correct) / static_cast<double>(n);
}

MacroScores macro_prf(const ConfusionMatrix& cm) {
  auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
  MacroScores out;
  for (std::size_t k = 0; k < cm.num_classes; ++k) {
    const auto tp = static_cast<double>(cm.true_positives(k));
    const double precision = ratio(tp, tp + static_cast<double>(cm.false_positives(k)));
    const double recall = ratio(tp, tp + static_cast<double>(cm.false_negatives(k)));
    out.precision += precision;
    out.recall += recall;
    out.f1 += ratio(2.0 * precision * recall, precision + recall);
  }
  const auto k = static_cast<double>(cm.num_classes);
  out.precision /= k;
  out.recall /= k;
  out.f1 /= k;
  return out;
}

}  // namespace mogat
