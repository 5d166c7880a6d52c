#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qnn/tensor.hpp"

namespace qnn {

enum class DataSource { IdxFiles, CifarBinary, Synthetic };

std::string_view to_string(DataSource source);
DataSource data_source_from_string(std::string_view name);

/// Geometry and provenance of an image classification benchmark.
struct DatasetSpec {
  std::string name = "cifar10";
  std::size_t s_in = 32;  // spatial size after any padding
  std::size_t c_in = 3;
  std::size_t num_classes = 10;
  DataSource source = DataSource::CifarBinary;

  /// s_in must be a positive multiple of 8 (three 2x2 pools); at least one class.
  void validate() const;

  static DatasetSpec cifar10();
  /// MNIST zero-padded from 28x28 to 32x32.
  static DatasetSpec mnist();
  /// SVHN geometry; loads from CIFAR-style binary records.
  static DatasetSpec svhn();
  static DatasetSpec synthetic(std::size_t s_in, std::size_t c_in, std::size_t num_classes);
  /// Preset lookup by name: cifar10 | mnist | svhn | synthetic.
  static DatasetSpec preset(std::string_view name);

  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct Dataset {
  Tensor images;  // [N,H,W,C], values on the signed int8 grid
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  /// Samples [begin, begin + count).
  Dataset slice(std::size_t begin, std::size_t count) const;
  /// Gathers the given sample indices into a new batch.
  Dataset gather(const std::vector<std::size_t>& indices) const;
};

/// Pixel byte b -> (b - 128) / 128 on the signed 8-bit grid: 0 -> -1, 255 -> 1 - 2^-7.
double pixel_to_input(std::uint8_t byte);

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Images are zero-padded (byte 0) to `pad_to` when it exceeds their size.
/// `limit` = 0 reads everything.
Dataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t pad_to = 0, std::size_t limit = 0);

/// Reads CIFAR-10 binary records (1 label byte + 3072 channel-major pixel bytes).
Dataset read_cifar_binary(const std::filesystem::path& file, std::size_t limit = 0);

/// Class-prototype blobs: each class has a random prototype image; samples
/// add Gaussian noise of the given standard deviation.
Dataset make_synthetic(const DatasetSpec& spec, std::size_t count, std::uint64_t seed,
                       double noise = 0.5);

enum class Split { Train, Test };

/// Loads a split from `dir` using the standard file names
/// (train-images-idx3-ubyte / t10k-images-idx3-ubyte, data_batch_{1..5}.bin /
/// test_batch.bin). Synthetic sources ignore `dir` and derive a seed from the split.
Dataset load_dataset(const DatasetSpec& spec, const std::filesystem::path& dir, Split split,
                     std::size_t limit = 0, std::uint64_t seed = 1);

}  // namespace qnn
