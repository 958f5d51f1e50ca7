#pragma once

// Test-only double-precision reference evaluator for small random op
// stacks, plus a central-difference gradient oracle. It shares no code with
// the library's kernels: convolution is direct, everything is double.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "ddist/autodiff.hpp"
#include "ddist/tensor.hpp"

namespace ddist::testing {

struct RefTensor {
  Shape shape;
  std::vector<double> data;
};

enum class RefOp { kConv, kBias, kRelu, kPool, kFlatten, kMatmul, kDivide, kSoftmax, kCrossEntropy };

struct RefStep {
  RefOp op;
  std::size_t param = 0;  // index into the parameter list (conv, bias, matmul)
  Padding padding = Padding::kValid;
  double scalar = 1.0;
};

/// Non-smooth decisions taken during a forward pass. Equal signatures at
/// x-h and x+h mean the step stayed inside one smooth piece.
struct Signature {
  std::vector<bool> relu_active;
  std::vector<std::size_t> pool_argmax;
  friend bool operator==(const Signature&, const Signature&) = default;
};

struct RandomNet {
  Shape input_shape;  // [B, C, H, W] or [B, D]
  std::vector<double> input;
  std::vector<RefTensor> params;
  std::vector<RefStep> steps;
  std::vector<double> labels;   // for kCrossEntropy
  std::vector<double> seed;     // projection for a non-scalar output
  bool scalar_output = false;
};

RandomNet make_random_net(std::mt19937_64& rng);

/// Forward pass in double. Returns the output values.
std::vector<double> reference_forward(const RandomNet& net, const std::vector<double>& input,
                                      const std::vector<RefTensor>& params, Signature* signature);

/// Scalar objective: the output (cross-entropy) or seed . output.
double reference_objective(const RandomNet& net, const std::vector<double>& input,
                           const std::vector<RefTensor>& params, Signature* signature);

/// Library graph for the same net. Returns {output node, input node, param nodes}.
struct BuiltGraph {
  NodeId output;
  NodeId input;
  std::vector<NodeId> params;
};
BuiltGraph build_library_graph(Graph& graph, const RandomNet& net);

struct GradCheckStats {
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  double max_rel_error = 0.0;  // over entries outside the absolute floor
  double max_abs_error = 0.0;
  std::size_t failures = 0;
};

/// Compares library reverse-mode gradients for every input and parameter
/// entry against central differences of the double reference with `step`.
/// An entry passes when |a-b| <= abs_floor or |a-b|/max(|a|,|b|) < rel_tol.
GradCheckStats check_gradients(const RandomNet& net, double step, double rel_tol, double abs_floor);

}  // namespace ddist::testing
