#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>

#include "ddist/dataset.hpp"
#include "ddist/model.hpp"

namespace ddist {

/// Mini-batch SGD settings. Defaults: lr 0.1, momentum 0.5, batch 128,
/// 20 epochs, dropout 0.5 on dense layers, T = 1.
struct TrainConfig {
  double learning_rate = 0.1;
  std::optional<double> lr_decay;  // multiplier applied every decay_delay epochs
  std::size_t decay_delay = 10;
  double momentum = 0.5;
  std::optional<double> momentum_decay;
  std::size_t batch_size = 128;
  std::size_t epochs = 20;
  float dropout_rate = 0.5f;
  double temperature = 1.0;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(std::size_t epoch, std::size_t batch, double loss);
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

/// -(1/B) sum_X sum_i label_i log(max(pred_i, 1e-12)) over [B,N] (or a
/// single [N]) predictions and probability labels.
double cross_entropy_loss(const Tensor& predictions, const Tensor& labels);

struct KlDecomposition {
  double cross_entropy;
  double entropy;
  double kl;
};

/// Cross-entropy H(p, q), entropy H(p) and KL(p || q) in nats for a soft
/// label p and a prediction q, all with the 1e-12 log floor.
KlDecomposition kl_decomposition_check(std::span<const float> soft_label,
                                       std::span<const float> prediction);

struct EpochMetrics {
  std::size_t epoch;  // 1-based
  double train_loss;  // mean over the epoch's batches, dropout active
  std::optional<double> test_accuracy;
};

using EpochObserver = std::function<void(const EpochMetrics&, const Model&)>;

struct TrainHooks {
  const LabeledDataset* evaluation = nullptr;  // accuracy reported per epoch when set
  EpochObserver on_epoch;
};

/// Trains a freshly initialized model on hard labels at config.temperature.
/// Initialization uses config.rng_seed; shuffling and dropout draw from a
/// stream derived from it.
Model train(const ModelSpec& spec, const LabeledDataset& data, const TrainConfig& config,
            const TrainHooks& hooks = {});

/// Same loop on arbitrary probability labels (the soft-label objective).
Model train_on_labels(const ModelSpec& spec, const LabeledDataset& data, const TrainConfig& config,
                      const TrainHooks& hooks = {});

/// Labels replaced by teacher.predict(X, teacher.temperature()); inputs
/// unchanged and in order.
LabeledDataset soft_label_dataset(const Model& teacher, const LabeledDataset& data);

struct Distillation {
  Model teacher;
  Model student;
};

/// Teacher trained at config.temperature on hard labels, then a student of
/// the same architecture trained from fresh initialization on the teacher's
/// soft labels at the same temperature. Both record that temperature;
/// evaluate them with a temperature override of 1.
Distillation distill(const ModelSpec& spec, const LabeledDataset& data, const TrainConfig& config,
                     const TrainHooks& teacher_hooks = {}, const TrainHooks& student_hooks = {});

/// Seed used for the student's initialization and batch order.
std::uint64_t student_seed(std::uint64_t seed);

}  // namespace ddist
