#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddist/autodiff.hpp"
#include "ddist/random.hpp"
#include "ddist/tensor.hpp"

namespace ddist {

enum class LayerKind : std::uint32_t {
  kConvRelu = 0,
  kMaxPool = 1,
  kDenseRelu = 2,
  kDenseLinear = 3,
  kSoftmax = 4,
};

std::string_view layer_kind_name(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kSoftmax;
  std::uint32_t units = 0;   // filters (conv) or output units (dense)
  std::uint32_t kernel = 0;  // square kernel extent (conv)
  Padding padding = Padding::kSame;
  float dropout_rate = 0.0f;  // training only; dense layers only

  static LayerSpec conv_relu(std::uint32_t filters, std::uint32_t kernel,
                             Padding padding = Padding::kSame);
  static LayerSpec maxpool();
  static LayerSpec dense_relu(std::uint32_t units, float dropout_rate = 0.0f);
  static LayerSpec dense_linear(std::uint32_t units);
  static LayerSpec softmax();

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Layer stack plus input shape [channels, height, width]. The last layer
/// is the (only) softmax; the width feeding it is the class count.
struct ModelSpec {
  Shape input_shape;
  std::vector<LayerSpec> layers;

  /// Throws std::invalid_argument describing the first violated rule.
  void validate() const;
  std::size_t class_count() const;
  std::size_t input_size() const { return shape_size(input_shape); }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Named desk-scale architectures for 1x28x28 inputs:
///   "mnist-small": conv(8,3x3) pool conv(16,3x3) pool dense(64) dense(64) linear(10) softmax
///   "mlp-tiny":    dense(128) dense(128) linear(10) softmax
/// Dense-relu layers receive `dropout_rate`.
ModelSpec architecture(std::string_view name, float dropout_rate = 0.5f);

/// Temperature softmax exp(z_i/T) / sum_l exp(z_l/T), max-subtracted,
/// evaluated in double and rounded to float.
std::vector<float> softmax_with_temperature(std::span<const float> logits, double temperature);

/// Classifier F with parameters, softmax temperature T and the seed that
/// produced its initialization. Immutable apart from parameter updates
/// made by training; const methods are safe to call concurrently.
class Model {
 public:
  Model(ModelSpec spec, std::vector<Tensor> parameters, double temperature, std::uint64_t seed);

  /// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
  static Model initialize(ModelSpec spec, std::uint64_t seed, double temperature = 1.0);

  const ModelSpec& spec() const { return spec_; }
  double temperature() const { return temperature_; }
  void set_temperature(double temperature);
  std::uint64_t seed() const { return seed_; }
  std::size_t class_count() const { return class_count_; }
  std::size_t input_size() const { return spec_.input_size(); }

  const std::vector<Tensor>& parameters() const { return parameters_; }
  std::vector<Tensor>& mutable_parameters() { return parameters_; }
  std::vector<std::string> parameter_names() const;
  void set_dropout_rates(float rate);

  /// Z(X) for one sample; X has the input shape or is flat [M].
  Tensor logits(const Tensor& x) const;
  /// [B, ...] -> [B, N]
  Tensor logits_batch(const Tensor& xs) const;

  /// F(X) at the model temperature, or at `temperature` when given.
  Tensor predict(const Tensor& x, std::optional<double> temperature = std::nullopt) const;
  Tensor predict_batch(const Tensor& xs, std::optional<double> temperature = std::nullopt) const;

  /// argmax of F(X) at T=1 (argmax does not depend on T).
  std::size_t classify(const Tensor& x) const;

  /// [N, M] matrix of dF_i/dX_j at `temperature`, one backward pass per class.
  Tensor input_jacobian(const Tensor& x, double temperature) const;

  /// mean |dF_i/dX_j| at T=1.
  double mean_abs_input_gradient(const Tensor& x) const;

  struct Forward {
    NodeId logits;
    std::vector<NodeId> parameters;
  };

  /// Records the forward pass on `graph` from an input node shaped
  /// [B, ...]. Parameters are trainable graph parameters when
  /// `trainable`, constants otherwise. With `dropout` set, dense-relu
  /// outputs are masked (inverted dropout) at each layer's rate.
  Forward build(Graph& graph, NodeId input, bool trainable, Rng* dropout = nullptr) const;

 private:
  Tensor as_batch(const Tensor& xs, bool single) const;

  ModelSpec spec_;
  std::vector<Tensor> parameters_;
  double temperature_;
  std::uint64_t seed_;
  std::size_t class_count_;
};

void validate_temperature(double temperature);

}  // namespace ddist
