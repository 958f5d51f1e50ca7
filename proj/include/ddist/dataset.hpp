#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ddist/tensor.hpp"

namespace ddist {

/// Samples with probability-vector labels. Hard labels are indicator
/// vectors; soft labels are arbitrary distributions over the N classes.
struct LabeledDataset {
  Tensor inputs;  // [count, ...sample shape]
  Tensor labels;  // [count, N]

  static LabeledDataset from_classes(Tensor inputs, std::span<const std::size_t> classes,
                                     std::size_t class_count);

  std::size_t size() const { return inputs.empty() ? 0 : inputs.dim(0); }
  std::size_t class_count() const { return labels.empty() ? 0 : labels.dim(1); }

  Tensor input(std::size_t i) const { return inputs.row(i); }
  std::span<const float> label(std::size_t i) const {
    return labels.data().subspan(i * class_count(), class_count());
  }

  /// Checks shapes and that every label is a probability vector (sum 1
  /// within 1e-5); with `require_hard`, also that each is an indicator.
  /// Throws std::invalid_argument.
  void validate(bool require_hard) const;

  bool is_hard() const;
  /// argmax of each label.
  std::vector<std::size_t> classes() const;

  /// Subset in the given order.
  LabeledDataset select(std::span<const std::size_t> indices) const;
};

}  // namespace ddist
