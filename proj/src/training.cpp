#include "ddist/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ddist {

namespace {

constexpr double kLogFloor = 1e-12;

double safe_log(double p) { return std::log(std::max(p, kLogFloor)); }

double evaluation_accuracy(const Model& model, const LabeledDataset& data) {
  const Tensor z = model.logits_batch(data.inputs);
  const std::size_t n = model.class_count();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (argmax(z.data().subspan(i * n, n)) == argmax(data.label(i))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

Model fit(const ModelSpec& spec, const LabeledDataset& data, const TrainConfig& config,
          const TrainHooks& hooks) {
  Model model = Model::initialize(spec, config.rng_seed, config.temperature);
  model.set_dropout_rates(config.dropout_rate);
  if (data.class_count() != model.class_count()) {
    throw std::invalid_argument("train: labels have " + std::to_string(data.class_count()) +
                                " classes, model has " + std::to_string(model.class_count()));
  }
  if (data.inputs.size() / data.size() != model.input_size()) {
    throw DimensionError("train inputs", spec.input_shape, data.inputs.shape());
  }

  Rng rng(derive_seed(config.rng_seed, 0x5eed));
  auto& params = model.mutable_parameters();
  std::vector<Tensor> velocity;
  for (const auto& p : params) velocity.emplace_back(p.shape());

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double lr = config.learning_rate;
  double momentum = config.momentum;
  const float temperature = static_cast<float>(config.temperature);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const LabeledDataset batch = data.select(idx);

      Shape in_shape{batch.size()};
      in_shape.insert(in_shape.end(), spec.input_shape.begin(), spec.input_shape.end());
      Graph graph;
      const NodeId x = graph.input(batch.inputs.reshaped(std::move(in_shape)));
      const auto fwd = model.build(graph, x, true, &rng);
      const NodeId scaled = graph.divide(fwd.logits, temperature);
      const NodeId loss = graph.softmax_cross_entropy(scaled, batch.labels);
      const double loss_value = graph.value(loss)[0];
      if (!std::isfinite(loss_value)) throw TrainingDivergedError(epoch, batches + 1, loss_value);

      const Gradients grads = graph.backward(loss);
      for (std::size_t p = 0; p < params.size(); ++p) {
        const auto g = grads[fwd.parameters[p]].data();
        auto v = velocity[p].data();
        auto w = params[p].data();
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = static_cast<float>(momentum * v[i] - lr * g[i]);
          w[i] += v[i];
        }
      }
      loss_sum += loss_value;
      ++batches;
    }
    if (config.decay_delay > 0 && epoch % config.decay_delay == 0) {
      if (config.lr_decay) lr *= *config.lr_decay;
      if (config.momentum_decay) momentum *= *config.momentum_decay;
    }
    for (const auto& p : params) p.check_finite("parameters after epoch " + std::to_string(epoch));
    if (hooks.evaluation != nullptr || hooks.on_epoch) {
      EpochMetrics metrics{epoch, loss_sum / static_cast<double>(batches), std::nullopt};
      if (hooks.evaluation != nullptr) metrics.test_accuracy = evaluation_accuracy(model, *hooks.evaluation);
      if (hooks.on_epoch) hooks.on_epoch(metrics, model);
    }
  }
  return model;
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (lr_decay && !(*lr_decay > 0.0)) fail("lr_decay must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must be in [0,1)");
  if (momentum_decay && !(*momentum_decay >= 0.0)) fail("momentum_decay must be nonnegative");
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f)) fail("dropout_rate must be in [0,1)");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) fail("temperature must be positive");
}

TrainingDivergedError::TrainingDivergedError(std::size_t epoch, std::size_t batch, double loss)
    : std::runtime_error("training diverged: loss " + std::to_string(loss) + " at epoch " +
                         std::to_string(epoch) + ", batch " + std::to_string(batch)),
      epoch_(epoch),
      batch_(batch) {}

double cross_entropy_loss(const Tensor& predictions, const Tensor& labels) {
  if (predictions.shape() != labels.shape() || predictions.rank() == 0 || predictions.rank() > 2) {
    throw DimensionError("cross_entropy_loss", predictions.shape(), labels.shape());
  }
  const std::size_t n = predictions.shape().back();
  const std::size_t rows = predictions.size() / n;
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double label_sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double y = labels[r * n + c];
      if (!(y >= 0.0)) throw std::invalid_argument("cross_entropy_loss: negative label entry");
      label_sum += y;
      if (y != 0.0) total -= y * safe_log(predictions[r * n + c]);
    }
    if (std::fabs(label_sum - 1.0) > 1e-5) {
      throw std::invalid_argument("cross_entropy_loss: label row " + std::to_string(r) +
                                  " sums to " + std::to_string(label_sum));
    }
  }
  return total / static_cast<double>(rows);
}

KlDecomposition kl_decomposition_check(std::span<const float> soft_label,
                                       std::span<const float> prediction) {
  if (soft_label.size() != prediction.size() || soft_label.empty()) {
    throw DimensionError("kl_decomposition_check", Shape{soft_label.size()}, Shape{prediction.size()});
  }
  for (auto v : {soft_label, prediction}) {
    double total = 0.0;
    for (float x : v) {
      if (!(x >= 0.0f)) throw std::invalid_argument("kl_decomposition_check: negative entry");
      total += x;
    }
    if (std::fabs(total - 1.0) > 1e-5) throw std::invalid_argument("kl_decomposition_check: not a probability vector");
  }
  KlDecomposition out{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < soft_label.size(); ++i) {
    const double p = soft_label[i];
    if (p == 0.0) continue;
    const double log_p = safe_log(p);
    const double log_q = safe_log(prediction[i]);
    out.cross_entropy -= p * log_q;
    out.entropy -= p * log_p;
    out.kl += p * (log_p - log_q);
  }
  return out;
}

Model train(const ModelSpec& spec, const LabeledDataset& data, const TrainConfig& config,
            const TrainHooks& hooks) {
  config.validate();
  data.validate(true);
  return fit(spec, data, config, hooks);
}

Model train_on_labels(const ModelSpec& spec, const LabeledDataset& data, const TrainConfig& config,
                      const TrainHooks& hooks) {
  config.validate();
  data.validate(false);
  return fit(spec, data, config, hooks);
}

LabeledDataset soft_label_dataset(const Model& teacher, const LabeledDataset& data) {
  if (data.size() == 0) throw std::invalid_argument("soft_label_dataset: empty dataset");
  return {data.inputs, teacher.predict_batch(data.inputs, teacher.temperature())};
}

std::uint64_t student_seed(std::uint64_t seed) { return derive_seed(seed, 0xd157); }

Distillation distill(const ModelSpec& spec, const LabeledDataset& data, const TrainConfig& config,
                     const TrainHooks& teacher_hooks, const TrainHooks& student_hooks) {
  Model teacher = train(spec, data, config, teacher_hooks);
  const LabeledDataset soft = soft_label_dataset(teacher, data);
  TrainConfig student_config = config;
  student_config.rng_seed = student_seed(config.rng_seed);
  Model student = train_on_labels(spec, soft, student_config, student_hooks);
  return {std::move(teacher), std::move(student)};
}

}  // namespace ddist
