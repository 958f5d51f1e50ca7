#include "ddist/dataset.hpp"

#include <gtest/gtest.h>

namespace ddist {
namespace {

TEST(LabeledDataset, FromClassesBuildsIndicators) {
  const std::vector<std::size_t> classes{2, 0, 1};
  const auto data = LabeledDataset::from_classes(Tensor({3, 2}), classes, 3);
  EXPECT_EQ(data.size(), 3u);
  EXPECT_EQ(data.class_count(), 3u);
  EXPECT_TRUE(data.is_hard());
  EXPECT_EQ(data.classes(), classes);
  EXPECT_EQ(data.label(0)[2], 1.0f);
  EXPECT_NO_THROW(data.validate(true));
}

TEST(LabeledDataset, SoftLabelsValidateOnlyWhenNotRequiredHard) {
  LabeledDataset data{Tensor({2, 2}), Tensor({2, 2}, std::vector<float>{0.7f, 0.3f, 0.5f, 0.5f})};
  EXPECT_FALSE(data.is_hard());
  EXPECT_NO_THROW(data.validate(false));
  EXPECT_THROW(data.validate(true), std::invalid_argument);
}

TEST(LabeledDataset, RejectsNonDistributions) {
  LabeledDataset data{Tensor({1, 2}), Tensor({1, 2}, std::vector<float>{0.7f, 0.4f})};
  EXPECT_THROW(data.validate(false), std::invalid_argument);
  LabeledDataset mismatch{Tensor({2, 2}), Tensor({1, 2}, std::vector<float>{1, 0})};
  EXPECT_THROW(mismatch.validate(false), std::invalid_argument);
}

TEST(LabeledDataset, SelectKeepsOrder) {
  Tensor inputs({3, 1}, std::vector<float>{10, 11, 12});
  const std::vector<std::size_t> classes{0, 1, 0};
  const auto data = LabeledDataset::from_classes(inputs, classes, 2);
  const std::vector<std::size_t> pick{2, 0};
  const auto sub = data.select(pick);
  EXPECT_EQ(sub.inputs.vec(), (std::vector<float>{12, 10}));
  EXPECT_EQ(sub.classes(), (std::vector<std::size_t>{0, 0}));
}

}  // namespace
}  // namespace ddist
