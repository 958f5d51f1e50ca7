#include "ddist/dataset.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ddist {

LabeledDataset LabeledDataset::from_classes(Tensor inputs, std::span<const std::size_t> classes,
                                            std::size_t class_count) {
  if (inputs.empty() || inputs.dim(0) != classes.size()) {
    throw std::invalid_argument("dataset: " + std::to_string(classes.size()) +
                                " labels for inputs of shape " + shape_string(inputs.shape()));
  }
  Tensor labels({classes.size(), class_count});
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] >= class_count) {
      throw std::invalid_argument("dataset: class index " + std::to_string(classes[i]) +
                                  " out of range for " + std::to_string(class_count) + " classes");
    }
    labels.at(i, classes[i]) = 1.0f;
  }
  return {std::move(inputs), std::move(labels)};
}

void LabeledDataset::validate(bool require_hard) const {
  if (inputs.empty() || labels.empty()) throw std::invalid_argument("dataset: empty");
  if (labels.rank() != 2 || labels.dim(0) != inputs.dim(0)) {
    throw std::invalid_argument("dataset: labels " + shape_string(labels.shape()) +
                                " do not match inputs " + shape_string(inputs.shape()));
  }
  for (std::size_t i = 0; i < size(); ++i) {
    double total = 0.0;
    std::size_t nonzero = 0;
    for (float v : label(i)) {
      if (!(v >= 0.0f) || !std::isfinite(v)) {
        throw std::invalid_argument("dataset: label " + std::to_string(i) + " has a negative or non-finite entry");
      }
      total += v;
      if (v != 0.0f) ++nonzero;
    }
    if (std::fabs(total - 1.0) > 1e-5) {
      throw std::invalid_argument("dataset: label " + std::to_string(i) + " sums to " + std::to_string(total));
    }
    if (require_hard && nonzero != 1) {
      throw std::invalid_argument("dataset: label " + std::to_string(i) + " is not a hard indicator");
    }
  }
}

bool LabeledDataset::is_hard() const {
  for (float v : labels.data()) {
    if (v != 0.0f && v != 1.0f) return false;
  }
  return true;
}

std::vector<std::size_t> LabeledDataset::classes() const {
  std::vector<std::size_t> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = argmax(label(i));
  return out;
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw std::invalid_argument("dataset: empty selection");
  const std::size_t in_stride = inputs.size() / size();
  const std::size_t n = class_count();
  Shape in_shape = inputs.shape();
  in_shape[0] = indices.size();
  std::vector<float> in_data, label_data;
  in_data.reserve(indices.size() * in_stride);
  label_data.reserve(indices.size() * n);
  for (auto i : indices) {
    if (i >= size()) throw std::out_of_range("dataset: index " + std::to_string(i));
    auto x = inputs.data().subspan(i * in_stride, in_stride);
    in_data.insert(in_data.end(), x.begin(), x.end());
    auto y = label(i);
    label_data.insert(label_data.end(), y.begin(), y.end());
  }
  return {Tensor(std::move(in_shape), std::move(in_data)),
          Tensor({indices.size(), n}, std::move(label_data))};
}

}  // namespace ddist
