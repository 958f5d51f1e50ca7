#include "ddist/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>

#include "ddist/random.hpp"

namespace ddist {

namespace {

std::uint32_t read_be32(const std::string& bytes, std::size_t offset, const char* what) {
  if (bytes.size() < offset + 4) {
    throw TruncatedFileError(std::string("IDX file truncated in header (") + what + ")");
  }
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  return v;
}

void write_be32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

unsigned char to_byte(float v) {
  return static_cast<unsigned char>(std::clamp(std::lround(v * 255.0f), 0L, 255L));
}

}  // namespace

LabeledDataset RawDataset::labeled(std::size_t class_count) const {
  return LabeledDataset::from_classes(images, labels, class_count);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

RawDataset parse_mnist_idx(const std::string& image_bytes, const std::string& label_bytes, Split split) {
  const auto image_magic = read_be32(image_bytes, 0, "magic");
  if (image_magic != kIdxImagesMagic) {
    throw BadMagicError("IDX images: bad magic " + std::to_string(image_magic) + " (expected 2051)");
  }
  const auto label_magic = read_be32(label_bytes, 0, "magic");
  if (label_magic != kIdxLabelsMagic) {
    throw BadMagicError("IDX labels: bad magic " + std::to_string(label_magic) + " (expected 2049)");
  }
  const std::size_t count = read_be32(image_bytes, 4, "count");
  const std::size_t rows = read_be32(image_bytes, 8, "rows");
  const std::size_t cols = read_be32(image_bytes, 12, "cols");
  const std::size_t label_count = read_be32(label_bytes, 4, "count");
  if (count != label_count) {
    throw CountMismatchError("IDX: " + std::to_string(count) + " images but " +
                             std::to_string(label_count) + " labels");
  }
  if (count == 0 || rows == 0 || cols == 0) throw DataFormatError("IDX: empty dataset");
  const std::size_t pixels = count * rows * cols;
  if (image_bytes.size() < 16 + pixels) {
    throw TruncatedFileError("IDX images: expected " + std::to_string(pixels) + " pixel bytes, found " +
                             std::to_string(image_bytes.size() - 16));
  }
  if (label_bytes.size() < 8 + count) {
    throw TruncatedFileError("IDX labels: expected " + std::to_string(count) + " label bytes, found " +
                             std::to_string(label_bytes.size() - 8));
  }
  RawDataset out;
  out.split = split;
  std::vector<float> data(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    data[i] = static_cast<float>(static_cast<unsigned char>(image_bytes[16 + i])) / 255.0f;
  }
  out.images = Tensor({count, 1, rows, cols}, std::move(data));
  out.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.labels[i] = static_cast<unsigned char>(label_bytes[8 + i]);
    if (out.labels[i] >= 10) {
      throw DataFormatError("IDX labels: label " + std::to_string(out.labels[i]) + " at " +
                            std::to_string(i) + " is not a digit class");
    }
  }
  out.checksum = fnv1a(label_bytes, fnv1a(image_bytes));
  return out;
}

RawDataset load_mnist_idx(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path, Split split) {
  return parse_mnist_idx(read_file(images_path), read_file(labels_path), split);
}

RawDataset parse_cifar10_binary(const std::string& bytes, Split split) {
  if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0) {
    throw TruncatedFileError("CIFAR10: size " + std::to_string(bytes.size()) +
                             " is not a positive multiple of 3073");
  }
  const std::size_t count = bytes.size() / kCifarRecordBytes;
  RawDataset out;
  out.split = split;
  std::vector<float> data(count * 3072);
  out.labels.resize(count);
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t base = r * kCifarRecordBytes;
    out.labels[r] = static_cast<unsigned char>(bytes[base]);
    if (out.labels[r] >= 10) throw DataFormatError("CIFAR10: label out of range in record " + std::to_string(r));
    for (std::size_t i = 0; i < 3072; ++i) {
      data[r * 3072 + i] = static_cast<float>(static_cast<unsigned char>(bytes[base + 1 + i])) / 255.0f;
    }
  }
  out.images = Tensor({count, 3, 32, 32}, std::move(data));
  out.checksum = fnv1a(bytes);
  return out;
}

RawDataset load_cifar10_binary(const std::filesystem::path& path, Split split) {
  return parse_cifar10_binary(read_file(path), split);
}

std::string encode_idx_images(const Tensor& images) {
  if (images.rank() != 4 || images.dim(1) != 1) {
    throw DimensionError("encode_idx_images", "expected [count,1,rows,cols], got " + shape_string(images.shape()));
  }
  std::string out;
  write_be32(out, kIdxImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(images.dim(0)));
  write_be32(out, static_cast<std::uint32_t>(images.dim(2)));
  write_be32(out, static_cast<std::uint32_t>(images.dim(3)));
  for (float v : images.data()) out.push_back(static_cast<char>(to_byte(v)));
  return out;
}

std::string encode_idx_labels(const std::vector<std::size_t>& labels) {
  std::string out;
  write_be32(out, kIdxLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (auto l : labels) out.push_back(static_cast<char>(l));
  return out;
}

std::string encode_cifar10_binary(const RawDataset& data) {
  if (data.images.rank() != 4 || data.images.dim(1) != 3 || data.images.dim(2) != 32 ||
      data.images.dim(3) != 32) {
    throw DimensionError("encode_cifar10_binary", "expected [count,3,32,32], got " +
                                                      shape_string(data.images.shape()));
  }
  std::string out;
  for (std::size_t r = 0; r < data.size(); ++r) {
    out.push_back(static_cast<char>(data.labels[r]));
    for (std::size_t i = 0; i < 3072; ++i) out.push_back(static_cast<char>(to_byte(data.images[r * 3072 + i])));
  }
  return out;
}

std::vector<std::size_t> subset_indices(const RawDataset& data, std::size_t count, std::uint64_t seed) {
  if (count > data.size()) {
    throw std::invalid_argument("subset: requested " + std::to_string(count) + " of " +
                                std::to_string(data.size()) + " samples");
  }
  Rng rng(seed);
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
  for (auto& [cls, members] : by_class) rng.shuffle(members);

  // Water-filling: raise every class quota in turn until `count` is reached;
  // classes with too few samples saturate and the rest absorb the remainder.
  std::map<std::size_t, std::size_t> quota;
  std::size_t assigned = 0;
  while (assigned < count) {
    for (auto& [cls, members] : by_class) {
      if (assigned == count) break;
      if (quota[cls] < members.size()) {
        ++quota[cls];
        ++assigned;
      }
    }
  }
  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  for (auto& [cls, members] : by_class) {
    chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(quota[cls]));
  }
  std::sort(chosen.begin(), chosen.end());
  rng.shuffle(chosen);
  return chosen;
}

RawDataset subset(const RawDataset& data, std::size_t count, std::uint64_t seed) {
  const auto indices = subset_indices(data, count, seed);
  RawDataset out;
  out.split = data.split;
  out.checksum = data.checksum;
  if (indices.empty()) return out;
  const std::size_t stride = data.images.size() / data.size();
  Shape shape = data.images.shape();
  shape[0] = indices.size();
  std::vector<float> pixels;
  pixels.reserve(indices.size() * stride);
  for (auto i : indices) {
    auto src = data.images.data().subspan(i * stride, stride);
    pixels.insert(pixels.end(), src.begin(), src.end());
    out.labels.push_back(data.labels[i]);
  }
  out.images = Tensor(std::move(shape), std::move(pixels));
  return out;
}

}  // namespace ddist
