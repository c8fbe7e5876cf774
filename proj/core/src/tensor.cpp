#include "mogat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mogat/error.hpp"

namespace mogat {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols)
    throw ShapeError("Tensor: " + std::to_string(data_.size()) + " values for shape " + std::to_string(rows) + "x" +
                     std::to_string(cols));
}

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("Tensor::item on a non-scalar tensor");
  return data_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::accumulate(const Tensor& other) {
  if (!same_shape(other)) throw ShapeError("Tensor::accumulate: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

}  // namespace mogat
