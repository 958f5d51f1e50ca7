#include "ddist/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace ddist {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

DimensionError::DimensionError(const std::string& op, const Shape& a, const Shape& b)
    : std::invalid_argument(op + ": incompatible shapes " + shape_string(a) +
                            " and " + shape_string(b)) {}

DimensionError::DimensionError(const std::string& op, const std::string& what)
    : std::invalid_argument(op + ": " + what) {}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  for (auto extent : shape_) {
    if (extent == 0) throw DimensionError("tensor", "zero extent in shape " + shape_string(shape_));
  }
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw DimensionError("tensor", "shape " + shape_string(shape_) + " holds " +
                                       std::to_string(shape_size(shape_)) +
                                       " elements, got " + std::to_string(data_.size()));
  }
}

Tensor Tensor::vector(std::initializer_list<float> values) {
  return Tensor(Shape{values.size()}, std::vector<float>(values));
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) throw DimensionError("reshape", shape_, shape);
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::slice(std::size_t begin, std::size_t end) const {
  if (shape_.empty() || begin >= end || end > shape_[0]) {
    throw DimensionError("slice", "range [" + std::to_string(begin) + ", " +
                                      std::to_string(end) + ") outside " +
                                      shape_string(shape_));
  }
  const std::size_t stride = data_.size() / shape_[0];
  Shape shape = shape_;
  shape[0] = end - begin;
  return Tensor(std::move(shape),
                std::vector<float>(data_.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                                   data_.begin() + static_cast<std::ptrdiff_t>(end * stride)));
}

Tensor Tensor::row(std::size_t i) const {
  Tensor one = slice(i, i + 1);
  Shape shape(shape_.begin() + 1, shape_.end());
  if (shape.empty()) shape = {1};
  return one.reshaped(std::move(shape));
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void Tensor::check_finite(const std::string& where) const {
  if (!all_finite()) throw NonFiniteError("non-finite value in " + where);
}

Tensor stack(std::span<const Tensor> items) {
  if (items.empty()) throw DimensionError("stack", "no tensors to stack");
  const Shape& inner = items.front().shape();
  Shape shape{items.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  std::vector<float> data;
  data.reserve(shape_size(shape));
  for (const auto& t : items) {
    if (t.shape() != inner) throw DimensionError("stack", inner, t.shape());
    data.insert(data.end(), t.data().begin(), t.data().end());
  }
  return Tensor(std::move(shape), std::move(data));
}

std::size_t argmax(std::span<const float> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace ddist
