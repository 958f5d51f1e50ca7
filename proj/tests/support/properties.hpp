#pragma once

// Exact property suites shared by the unit tests and the acceptance gate.
// Each returns a verdict plus a one-line summary of what was measured.

#include <cstddef>
#include <cstdint>
#include <string>

namespace ddist::testing {

struct SuiteResult {
  bool pass = false;
  std::string detail;
};

/// Reverse-mode gradients of `graphs` random dense/conv/pool/softmax stacks
/// against central differences (step 1e-3): relative error < 1e-3 outside
/// an absolute floor of 1e-5.
SuiteResult gradient_suite(std::size_t graphs, std::uint64_t seed);

/// Temperature softmax: normalization, argmax invariance across T, logit
/// shift invariance, and the input Jacobian of an identity-logit model
/// against F_i(delta_il - F_l)/T including its exact 1/T scaling.
SuiteResult softmax_suite(std::uint64_t seed);

/// Cross-entropy with indicator labels equals -log F_t; CE = H + KL with
/// KL >= 0 on 1000 random distribution pairs.
SuiteResult loss_suite(std::uint64_t seed);

/// On random 6x6-input linear-softmax models, every JSMA pair selection
/// equals an exhaustive search over all candidate pairs.
SuiteResult saliency_oracle_suite(std::size_t instances, std::uint64_t seed);

}  // namespace ddist::testing
