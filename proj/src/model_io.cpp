#include "ddist/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ddist {

namespace {

constexpr char kMagic[8] = {'D', 'D', 'I', 'S', 'T', 'M', 'D', 'L'};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    out_.append(reinterpret_cast<const char*>(raw), sizeof(T));
  }
  void bytes(const char* data, std::size_t n) { out_.append(data, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  template <typename T>
  T get(const char* what) {
    if (in_.size() - pos_ < sizeof(T)) {
      throw ModelFormatError(std::string("model file truncated while reading ") + what);
    }
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, in_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }
  std::string bytes(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) throw ModelFormatError(std::string("model file truncated while reading ") + what);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const Model& model) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kModelFormatVersion);
  const auto& spec = model.spec();
  for (auto extent : spec.input_shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(extent));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.class_count()));
  w.put<double>(model.temperature());
  w.put<std::uint64_t>(model.seed());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.layers.size()));
  for (const auto& layer : spec.layers) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.kind));
    w.put<std::uint32_t>(layer.units);
    w.put<std::uint32_t>(layer.kernel);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.padding));
    w.put<float>(layer.dropout_rate);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.parameters().size()));
  for (const auto& t : model.parameters()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (auto extent : t.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(extent));
    for (float v : t.data()) w.put<float>(v);
  }
  return w.take();
}

Model deserialize_model(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof(kMagic), "magic") != std::string(kMagic, sizeof(kMagic))) {
    throw ModelFormatError("not a model file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kModelFormatVersion) {
    throw ModelFormatError("unsupported model format version " + std::to_string(version));
  }
  ModelSpec spec;
  for (int i = 0; i < 3; ++i) spec.input_shape.push_back(r.get<std::uint32_t>("input shape"));
  const auto classes = r.get<std::uint32_t>("class count");
  const auto temperature = r.get<double>("temperature");
  const auto seed = r.get<std::uint64_t>("seed");
  const auto layer_count = r.get<std::uint32_t>("layer count");
  if (layer_count > 4096) throw ModelFormatError("implausible layer count");
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    LayerSpec layer;
    const auto kind = r.get<std::uint32_t>("layer kind");
    if (kind > static_cast<std::uint32_t>(LayerKind::kSoftmax)) {
      throw ModelFormatError("unknown layer kind " + std::to_string(kind));
    }
    layer.kind = static_cast<LayerKind>(kind);
    layer.units = r.get<std::uint32_t>("layer units");
    layer.kernel = r.get<std::uint32_t>("layer kernel");
    const auto padding = r.get<std::uint32_t>("layer padding");
    if (padding > 1) throw ModelFormatError("unknown padding " + std::to_string(padding));
    layer.padding = static_cast<Padding>(padding);
    layer.dropout_rate = r.get<float>("layer dropout");
    spec.layers.push_back(layer);
  }
  const auto tensor_count = r.get<std::uint32_t>("tensor count");
  if (tensor_count > 4096) throw ModelFormatError("implausible tensor count");
  std::vector<Tensor> params;
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    const auto rank = r.get<std::uint32_t>("tensor rank");
    if (rank == 0 || rank > 8) throw ModelFormatError("bad tensor rank " + std::to_string(rank));
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(r.get<std::uint32_t>("tensor shape"));
    const std::size_t n = shape_size(shape);
    if (n == 0 || n > bytes.size()) throw ModelFormatError("bad tensor shape " + shape_string(shape));
    std::vector<float> data(n);
    for (auto& v : data) v = r.get<float>("tensor data");
    params.emplace_back(std::move(shape), std::move(data));
  }
  if (!r.done()) throw ModelFormatError("trailing bytes after parameter tensors");
  try {
    Model model(std::move(spec), std::move(params), temperature, seed);
    if (model.class_count() != classes) throw ModelFormatError("class count disagrees with layers");
    return model;
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(std::string("inconsistent model file: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string bytes = serialize_model(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace ddist
