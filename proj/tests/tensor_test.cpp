#include "ddist/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace ddist {
namespace {

TEST(Tensor, RejectsZeroExtent) { EXPECT_THROW(Tensor({2, 0}), DimensionError); }

TEST(Tensor, RejectsDataSizeMismatch) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>{1, 2, 3}), DimensionError);
}

TEST(Tensor, RowDropsLeadingAxis) {
  Tensor t({2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6});
  Tensor r = t.row(1);
  EXPECT_EQ(r.shape(), (Shape{3}));
  EXPECT_EQ(r.vec(), (std::vector<float>{4, 5, 6}));
}

TEST(Tensor, SliceOutOfRangeThrows) {
  Tensor t({2, 3});
  EXPECT_THROW(t.slice(1, 3), DimensionError);
  EXPECT_THROW(t.slice(1, 1), DimensionError);
}

TEST(Tensor, ReshapePreservesData) {
  Tensor t({2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.reshaped({3, 2}).vec(), t.vec());
  EXPECT_THROW(t.reshaped({4}), DimensionError);
}

TEST(Tensor, StackAddsLeadingAxis) {
  std::vector<Tensor> items{Tensor::vector({1, 2}), Tensor::vector({3, 4})};
  Tensor s = stack(items);
  EXPECT_EQ(s.shape(), (Shape{2, 2}));
  EXPECT_EQ(s.vec(), (std::vector<float>{1, 2, 3, 4}));
  items.push_back(Tensor::vector({1, 2, 3}));
  EXPECT_THROW(stack(items), DimensionError);
}

TEST(Tensor, CheckFiniteNamesLocation) {
  Tensor t = Tensor::vector({1.0f, std::nanf("")});
  EXPECT_FALSE(t.all_finite());
  try {
    t.check_finite("layer3");
    FAIL();
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("layer3"), std::string::npos);
  }
}

TEST(Tensor, ArgmaxTiesGoToLowestIndex) {
  std::vector<float> v{0.2f, 0.5f, 0.5f, 0.1f};
  EXPECT_EQ(argmax(v), 1u);
}

}  // namespace
}  // namespace ddist
