#include "ddist/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ddist {

namespace {

constexpr std::size_t kInferenceChunk = 256;

struct ParamShape {
  Shape weight;
  Shape bias;
  std::size_t fan_in;
  std::size_t fan_out;
};

// Walks the layer stack and returns one entry per parameterized layer.
std::vector<std::pair<std::size_t, ParamShape>> parameter_layout(const ModelSpec& spec) {
  std::vector<std::pair<std::size_t, ParamShape>> out;
  std::size_t c = spec.input_shape[0], h = spec.input_shape[1], w = spec.input_shape[2];
  std::size_t features = c * h * w;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    switch (layer.kind) {
      case LayerKind::kConvRelu: {
        const std::size_t k = layer.kernel, f = layer.units;
        out.push_back({i, {{f, c, k, k}, {f}, c * k * k, f * k * k}});
        if (layer.padding == Padding::kValid) {
          h = h - k + 1;
          w = w - k + 1;
        }
        c = f;
        features = c * h * w;
        break;
      }
      case LayerKind::kMaxPool:
        h /= 2;
        w /= 2;
        features = c * h * w;
        break;
      case LayerKind::kDenseRelu:
      case LayerKind::kDenseLinear:
        out.push_back({i, {{features, layer.units}, {layer.units}, features, layer.units}});
        features = layer.units;
        break;
      case LayerKind::kSoftmax:
        break;
    }
  }
  return out;
}

}  // namespace

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConvRelu: return "conv-relu";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kDenseRelu: return "dense-relu";
    case LayerKind::kDenseLinear: return "dense-linear";
    case LayerKind::kSoftmax: return "softmax";
  }
  return "unknown";
}

LayerSpec LayerSpec::conv_relu(std::uint32_t filters, std::uint32_t kernel, Padding padding) {
  return {LayerKind::kConvRelu, filters, kernel, padding, 0.0f};
}
LayerSpec LayerSpec::maxpool() { return {LayerKind::kMaxPool, 0, 0, Padding::kSame, 0.0f}; }
LayerSpec LayerSpec::dense_relu(std::uint32_t units, float dropout_rate) {
  return {LayerKind::kDenseRelu, units, 0, Padding::kSame, dropout_rate};
}
LayerSpec LayerSpec::dense_linear(std::uint32_t units) {
  return {LayerKind::kDenseLinear, units, 0, Padding::kSame, 0.0f};
}
LayerSpec LayerSpec::softmax() { return {LayerKind::kSoftmax, 0, 0, Padding::kSame, 0.0f}; }

void ModelSpec::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("model spec: " + what); };
  if (input_shape.size() != 3 || shape_size(input_shape) == 0) {
    fail("input shape must be [channels, height, width], got " + shape_string(input_shape));
  }
  if (layers.empty() || layers.back().kind != LayerKind::kSoftmax) fail("final layer must be softmax");
  std::size_t c = input_shape[0], h = input_shape[1], w = input_shape[2];
  bool spatial = true;
  std::size_t width = c * h * w;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" +
                              std::string(layer_kind_name(layer.kind)) + ")";
    if (layer.kind == LayerKind::kSoftmax && i + 1 != layers.size()) fail("exactly one softmax, last");
    if (!(layer.dropout_rate >= 0.0f && layer.dropout_rate < 1.0f)) fail(where + ": dropout outside [0,1)");
    const bool dense = layer.kind == LayerKind::kDenseRelu || layer.kind == LayerKind::kDenseLinear;
    if (layer.dropout_rate != 0.0f && !dense) fail(where + ": dropout only on dense layers");
    switch (layer.kind) {
      case LayerKind::kConvRelu:
        if (!spatial) fail(where + ": convolution after a dense layer");
        if (layer.units == 0 || layer.kernel == 0) fail(where + ": zero filters or kernel");
        if (layer.padding == Padding::kSame && layer.kernel % 2 == 0) fail(where + ": same padding needs an odd kernel");
        if (layer.padding == Padding::kValid) {
          if (layer.kernel > h || layer.kernel > w) fail(where + ": kernel larger than input");
          h = h - layer.kernel + 1;
          w = w - layer.kernel + 1;
        }
        c = layer.units;
        width = c * h * w;
        break;
      case LayerKind::kMaxPool:
        if (!spatial) fail(where + ": pooling after a dense layer");
        if (h % 2 != 0 || w % 2 != 0) fail(where + ": odd spatial extent " + std::to_string(h) + "x" + std::to_string(w));
        h /= 2;
        w /= 2;
        width = c * h * w;
        break;
      case LayerKind::kDenseRelu:
      case LayerKind::kDenseLinear:
        if (layer.units == 0) fail(where + ": zero units");
        spatial = false;
        width = layer.units;
        break;
      case LayerKind::kSoftmax:
        if (width < 1) fail("empty softmax input");
        break;
    }
  }
}

std::size_t ModelSpec::class_count() const {
  std::size_t width = input_size();
  std::size_t c = input_shape.at(0), h = input_shape.at(1), w = input_shape.at(2);
  for (const auto& layer : layers) {
    switch (layer.kind) {
      case LayerKind::kConvRelu:
        if (layer.padding == Padding::kValid) {
          h = h - layer.kernel + 1;
          w = w - layer.kernel + 1;
        }
        c = layer.units;
        width = c * h * w;
        break;
      case LayerKind::kMaxPool:
        h /= 2;
        w /= 2;
        width = c * h * w;
        break;
      case LayerKind::kDenseRelu:
      case LayerKind::kDenseLinear:
        width = layer.units;
        break;
      case LayerKind::kSoftmax:
        return width;
    }
  }
  return width;
}

ModelSpec architecture(std::string_view name, float dropout_rate) {
  ModelSpec spec;
  spec.input_shape = {1, 28, 28};
  if (name == "mnist-small") {
    spec.layers = {LayerSpec::conv_relu(8, 3), LayerSpec::maxpool(),
                   LayerSpec::conv_relu(16, 3), LayerSpec::maxpool(),
                   LayerSpec::dense_relu(64, dropout_rate), LayerSpec::dense_relu(64, dropout_rate),
                   LayerSpec::dense_linear(10), LayerSpec::softmax()};
  } else if (name == "mlp-tiny") {
    spec.layers = {LayerSpec::dense_relu(128, dropout_rate), LayerSpec::dense_relu(128, dropout_rate),
                   LayerSpec::dense_linear(10), LayerSpec::softmax()};
  } else {
    throw std::invalid_argument("unknown architecture '" + std::string(name) +
                                "' (expected mnist-small or mlp-tiny)");
  }
  return spec;
}

void validate_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("temperature must be positive and finite, got " +
                                std::to_string(temperature));
  }
}

std::vector<float> softmax_with_temperature(std::span<const float> logits, double temperature) {
  validate_temperature(temperature);
  if (logits.empty()) throw DimensionError("softmax", "empty logits");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> e(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp((static_cast<double>(logits[i]) - top) / temperature);
    total += e[i];
  }
  std::vector<float> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<float>(e[i] / total);
  return out;
}

Model::Model(ModelSpec spec, std::vector<Tensor> parameters, double temperature, std::uint64_t seed)
    : spec_(std::move(spec)), parameters_(std::move(parameters)), temperature_(temperature), seed_(seed) {
  spec_.validate();
  validate_temperature(temperature_);
  class_count_ = spec_.class_count();
  const auto layout = parameter_layout(spec_);
  if (parameters_.size() != 2 * layout.size()) {
    throw std::invalid_argument("model: expected " + std::to_string(2 * layout.size()) +
                                " parameter tensors, got " + std::to_string(parameters_.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (parameters_[2 * i].shape() != layout[i].second.weight) {
      throw DimensionError("model weight", layout[i].second.weight, parameters_[2 * i].shape());
    }
    if (parameters_[2 * i + 1].shape() != layout[i].second.bias) {
      throw DimensionError("model bias", layout[i].second.bias, parameters_[2 * i + 1].shape());
    }
  }
}

Model Model::initialize(ModelSpec spec, std::uint64_t seed, double temperature) {
  spec.validate();
  Rng rng(seed);
  std::vector<Tensor> params;
  for (const auto& [index, shapes] : parameter_layout(spec)) {
    Tensor weight(shapes.weight);
    const double limit = std::sqrt(6.0 / static_cast<double>(shapes.fan_in + shapes.fan_out));
    for (auto& v : weight.data()) v = static_cast<float>(rng.uniform(-limit, limit));
    params.push_back(std::move(weight));
    params.emplace_back(shapes.bias);
  }
  return Model(std::move(spec), std::move(params), temperature, seed);
}

void Model::set_temperature(double temperature) {
  validate_temperature(temperature);
  temperature_ = temperature;
}

std::vector<std::string> Model::parameter_names() const {
  std::vector<std::string> names;
  for (const auto& [index, shapes] : parameter_layout(spec_)) {
    names.push_back("layer" + std::to_string(index) + ".weight");
    names.push_back("layer" + std::to_string(index) + ".bias");
  }
  return names;
}

void Model::set_dropout_rates(float rate) {
  for (auto& layer : spec_.layers) {
    if (layer.kind == LayerKind::kDenseRelu) layer.dropout_rate = rate;
  }
  spec_.validate();
}

Model::Forward Model::build(Graph& graph, NodeId input, bool trainable, Rng* dropout) const {
  Forward fwd{};
  const auto names = parameter_names();
  std::size_t next_param = 0;
  auto param = [&]() {
    const NodeId id = trainable ? graph.parameter(names[next_param], parameters_[next_param])
                                : graph.input(parameters_[next_param]);
    fwd.parameters.push_back(id);
    ++next_param;
    return id;
  };
  const std::size_t batch = graph.value(input).dim(0);
  NodeId x = input;
  auto flatten = [&]() {
    if (graph.value(x).rank() != 2) x = graph.reshape(x, {batch, graph.value(x).size() / batch});
  };

  for (const auto& layer : spec_.layers) {
    switch (layer.kind) {
      case LayerKind::kConvRelu: {
        const NodeId w = param();
        const NodeId b = param();
        x = graph.relu(graph.add_bias(graph.conv2d(x, w, layer.padding), b));
        break;
      }
      case LayerKind::kMaxPool:
        x = graph.maxpool2x2(x);
        break;
      case LayerKind::kDenseRelu:
      case LayerKind::kDenseLinear: {
        flatten();
        const NodeId w = param();
        const NodeId b = param();
        x = graph.add_bias(graph.matmul(x, w), b);
        if (layer.kind == LayerKind::kDenseRelu) x = graph.relu(x);
        if (dropout != nullptr && layer.dropout_rate > 0.0f) {
          const double keep = 1.0 - layer.dropout_rate;
          Tensor mask(graph.value(x).shape());
          for (auto& m : mask.data()) m = dropout->uniform() < keep ? static_cast<float>(1.0 / keep) : 0.0f;
          x = graph.multiply(x, std::move(mask));
        }
        break;
      }
      case LayerKind::kSoftmax:
        flatten();
        fwd.logits = x;
        break;
    }
  }
  return fwd;
}

Tensor Model::as_batch(const Tensor& xs, bool single) const {
  const std::size_t m = input_size();
  Shape shape{0};
  shape.insert(shape.end(), spec_.input_shape.begin(), spec_.input_shape.end());
  if (single) {
    if (xs.shape() != spec_.input_shape && xs.shape() != Shape{m}) {
      throw DimensionError("model input", spec_.input_shape, xs.shape());
    }
    shape[0] = 1;
    return xs.reshaped(std::move(shape));
  }
  if (xs.rank() < 2 || xs.size() != xs.dim(0) * m) {
    Shape expected = shape;
    expected[0] = xs.rank() > 0 ? xs.dim(0) : 0;
    throw DimensionError("model batch input", expected, xs.shape());
  }
  shape[0] = xs.dim(0);
  return xs.reshaped(std::move(shape));
}

Tensor Model::logits(const Tensor& x) const {
  Graph graph;
  const NodeId in = graph.input(as_batch(x, true));
  const auto fwd = build(graph, in, false);
  return graph.value(fwd.logits).reshaped({class_count_});
}

Tensor Model::logits_batch(const Tensor& xs) const {
  const Tensor batch = as_batch(xs, false);
  const std::size_t count = batch.dim(0);
  std::vector<float> out;
  out.reserve(count * class_count_);
  for (std::size_t begin = 0; begin < count; begin += kInferenceChunk) {
    const std::size_t end = std::min(count, begin + kInferenceChunk);
    Graph graph;
    const NodeId in = graph.input(batch.slice(begin, end));
    const auto fwd = build(graph, in, false);
    const auto z = graph.value(fwd.logits).data();
    out.insert(out.end(), z.begin(), z.end());
  }
  return Tensor({count, class_count_}, std::move(out));
}

Tensor Model::predict(const Tensor& x, std::optional<double> temperature) const {
  const double t = temperature.value_or(temperature_);
  validate_temperature(t);
  const Tensor z = logits(x);
  z.check_finite("logits");
  return Tensor({class_count_}, softmax_with_temperature(z.data(), t));
}

Tensor Model::predict_batch(const Tensor& xs, std::optional<double> temperature) const {
  const double t = temperature.value_or(temperature_);
  validate_temperature(t);
  Tensor z = logits_batch(xs);
  z.check_finite("logits");
  for (std::size_t r = 0; r < z.dim(0); ++r) {
    auto row = z.data().subspan(r * class_count_, class_count_);
    const auto p = softmax_with_temperature(row, t);
    std::copy(p.begin(), p.end(), row.begin());
  }
  return z;
}

std::size_t Model::classify(const Tensor& x) const { return argmax(logits(x).data()); }

Tensor Model::input_jacobian(const Tensor& x, double temperature) const {
  validate_temperature(temperature);
  Graph graph;
  const NodeId in = graph.input(as_batch(x, true), true);
  const auto fwd = build(graph, in, false);
  const NodeId probs = graph.softmax(graph.divide(fwd.logits, static_cast<float>(temperature)));
  graph.value(probs).check_finite("softmax output");
  const std::size_t m = input_size();
  Tensor jac({class_count_, m});
  for (std::size_t i = 0; i < class_count_; ++i) {
    Tensor seed({1, class_count_});
    seed[i] = 1.0f;
    const auto grads = graph.backward(probs, seed);
    const auto row = grads[in].data();
    std::copy(row.begin(), row.end(), jac.data().begin() + static_cast<std::ptrdiff_t>(i * m));
  }
  jac.check_finite("input jacobian");
  return jac;
}

double Model::mean_abs_input_gradient(const Tensor& x) const {
  const Tensor jac = input_jacobian(x, 1.0);
  double total = 0.0;
  for (float v : jac.data()) total += std::fabs(static_cast<double>(v));
  return total / static_cast<double>(jac.size());
}

}  // namespace ddist
