#pragma once

// MNIST IDX and CIFAR10 binary loaders.
//
// IDX (big-endian):
//   images: u32 magic 0x00000803, u32 count, u32 rows, u32 cols, count*rows*cols u8 pixels
//   labels: u32 magic 0x00000801, u32 count, count u8 labels
// CIFAR10 binary batch: records of 1 label byte + 3072 pixel bytes
// (1024 R, then 1024 G, then 1024 B, each row-major 32x32).
// Pixels are scaled to [0,1] by dividing by 255.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddist/dataset.hpp"
#include "ddist/tensor.hpp"

namespace ddist {

enum class Split { kTrain, kTest };

struct RawDataset {
  Tensor images;                     // [count, channels, height, width]
  std::vector<std::size_t> labels;   // class indices
  Split split = Split::kTrain;
  std::uint64_t checksum = 0;        // FNV-1a over the source bytes

  std::size_t size() const { return labels.size(); }
  LabeledDataset labeled(std::size_t class_count = 10) const;
};

class DataFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BadMagicError : public DataFormatError {
 public:
  using DataFormatError::DataFormatError;
};
class TruncatedFileError : public DataFormatError {
 public:
  using DataFormatError::DataFormatError;
};
class CountMismatchError : public DataFormatError {
 public:
  using DataFormatError::DataFormatError;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
inline constexpr std::size_t kCifarRecordBytes = 1 + 3 * 32 * 32;

RawDataset load_mnist_idx(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path, Split split = Split::kTrain);
RawDataset parse_mnist_idx(const std::string& image_bytes, const std::string& label_bytes,
                           Split split = Split::kTrain);

RawDataset load_cifar10_binary(const std::filesystem::path& path, Split split = Split::kTrain);
RawDataset parse_cifar10_binary(const std::string& bytes, Split split = Split::kTrain);

/// Writers for fixtures and conversions. Pixels are rounded from [0,1] to bytes.
std::string encode_idx_images(const Tensor& images);
std::string encode_idx_labels(const std::vector<std::size_t>& labels);
std::string encode_cifar10_binary(const RawDataset& data);

/// Stratified deterministic subset: per-class quotas as equal as possible
/// (remainders go to the lowest class indices that still have samples),
/// chosen by a seeded shuffle within each class. Returned in a seeded
/// shuffled order. Throws std::invalid_argument when count > size.
std::vector<std::size_t> subset_indices(const RawDataset& data, std::size_t count, std::uint64_t seed);
RawDataset subset(const RawDataset& data, std::size_t count, std::uint64_t seed);

std::string read_file(const std::filesystem::path& path);

}  // namespace ddist
