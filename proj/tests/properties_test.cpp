#include "properties.hpp"

#include <gtest/gtest.h>

namespace ddist::testing {
namespace {

TEST(Properties, GradientsMatchCentralDifferences) {
  const SuiteResult r = gradient_suite(120, 20240601);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Properties, SoftmaxTemperatureInvariants) {
  const SuiteResult r = softmax_suite(11);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Properties, LossIdentities) {
  const SuiteResult r = loss_suite(12);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Properties, SaliencySelectionMatchesExhaustiveSearch) {
  const SuiteResult r = saliency_oracle_suite(20, 13);
  EXPECT_TRUE(r.pass) << r.detail;
}

}  // namespace
}  // namespace ddist::testing
