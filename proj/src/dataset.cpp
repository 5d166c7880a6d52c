#include "qnn/dataset.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>
#include <random>

#include "qnn/error.hpp"
#include "qnn/quantization.hpp"

namespace qnn {

namespace fs = std::filesystem;

std::string_view to_string(DataSource source) {
  switch (source) {
    case DataSource::IdxFiles: return "idx_files";
    case DataSource::CifarBinary: return "cifar_binary";
    case DataSource::Synthetic: return "synthetic";
  }
  return "unknown";
}

DataSource data_source_from_string(std::string_view name) {
  if (name == "idx_files" || name == "idx") return DataSource::IdxFiles;
  if (name == "cifar_binary" || name == "cifar") return DataSource::CifarBinary;
  if (name == "synthetic") return DataSource::Synthetic;
  throw ConfigError("unknown dataset source '" + std::string(name) + "'");
}

void DatasetSpec::validate() const {
  if (s_in == 0 || s_in % 8 != 0)
    throw ConfigError("dataset '" + name + "': s_in must be a positive multiple of 8, got " +
                      std::to_string(s_in));
  if (c_in == 0) throw ConfigError("dataset '" + name + "': c_in must be positive");
  if (num_classes == 0) throw ConfigError("dataset '" + name + "': num_classes must be positive");
}

DatasetSpec DatasetSpec::cifar10() { return {"cifar10", 32, 3, 10, DataSource::CifarBinary}; }
DatasetSpec DatasetSpec::mnist() { return {"mnist", 32, 1, 10, DataSource::IdxFiles}; }
DatasetSpec DatasetSpec::svhn() { return {"svhn", 32, 3, 10, DataSource::CifarBinary}; }
DatasetSpec DatasetSpec::synthetic(std::size_t s_in, std::size_t c_in, std::size_t num_classes) {
  return {"synthetic", s_in, c_in, num_classes, DataSource::Synthetic};
}

DatasetSpec DatasetSpec::preset(std::string_view name) {
  if (name == "cifar10" || name == "cifar") return cifar10();
  if (name == "mnist") return mnist();
  if (name == "svhn") return svhn();
  if (name == "synthetic") return synthetic(8, 1, 2);
  throw ConfigError("unknown dataset preset '" + std::string(name) + "'");
}

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > size()) throw ShapeError("dataset slice out of range");
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), begin);
  return gather(idx);
}

Dataset Dataset::gather(const std::vector<std::size_t>& indices) const {
  if (indices.empty()) throw ShapeError("dataset gather: empty index list");
  Shape shape = images.shape();
  const std::size_t per = images.size() / shape[0];
  shape[0] = indices.size();
  Dataset out{Tensor(shape), {}};
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= size()) throw ShapeError("dataset gather: index out of range");
    std::copy_n(images.data() + src * per, per, out.images.data() + i * per);
    out.labels.push_back(labels[src]);
  }
  return out;
}

double pixel_to_input(std::uint8_t byte) {
  return quantize_weight((static_cast<double>(byte) - 128.0) / 128.0, 8);
}

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& buf, std::size_t offset, const fs::path& path) {
  if (offset + 4 > buf.size()) throw DataError("'" + path.string() + "': truncated header");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarPixels = kCifarSide * kCifarSide * 3;
constexpr std::size_t kCifarRecord = 1 + kCifarPixels;

}  // namespace

Dataset read_idx(const fs::path& images, const fs::path& labels, std::size_t pad_to,
                 std::size_t limit) {
  const auto ibuf = read_file(images);
  const auto lbuf = read_file(labels);
  if (be32(ibuf, 0, images) != kIdxImagesMagic)
    throw DataError("'" + images.string() + "': bad IDX image magic");
  if (be32(lbuf, 0, labels) != kIdxLabelsMagic)
    throw DataError("'" + labels.string() + "': bad IDX label magic");

  std::size_t count = be32(ibuf, 4, images);
  const std::size_t rows = be32(ibuf, 8, images);
  const std::size_t cols = be32(ibuf, 12, images);
  const std::size_t label_count = be32(lbuf, 4, labels);
  if (label_count != count)
    throw DataError("IDX image/label count mismatch: " + std::to_string(count) + " vs " +
                    std::to_string(label_count));
  if (ibuf.size() < 16 + count * rows * cols)
    throw DataError("'" + images.string() + "': truncated image data");
  if (lbuf.size() < 8 + count) throw DataError("'" + labels.string() + "': truncated label data");
  if (rows == 0 || cols == 0) throw DataError("'" + images.string() + "': zero image extent");
  if (limit) count = std::min(count, limit);

  const std::size_t out_h = std::max(rows, pad_to), out_w = std::max(cols, pad_to);
  const std::size_t top = (out_h - rows) / 2, left = (out_w - cols) / 2;
  Dataset ds{Tensor({count, out_h, out_w, 1}, pixel_to_input(0)), {}};
  ds.labels.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const std::uint8_t* src = ibuf.data() + 16 + n * rows * cols;
    for (std::size_t y = 0; y < rows; ++y)
      for (std::size_t x = 0; x < cols; ++x)
        ds.images[(n * out_h + top + y) * out_w + left + x] = pixel_to_input(src[y * cols + x]);
    ds.labels.push_back(lbuf[8 + n]);
  }
  return ds;
}

Dataset read_cifar_binary(const fs::path& file, std::size_t limit) {
  const auto buf = read_file(file);
  if (buf.empty() || buf.size() % kCifarRecord != 0)
    throw DataError("'" + file.string() + "': size " + std::to_string(buf.size()) +
                    " is not a multiple of the 3073-byte record");
  std::size_t count = buf.size() / kCifarRecord;
  if (limit) count = std::min(count, limit);

  Dataset ds{Tensor({count, kCifarSide, kCifarSide, 3}), {}};
  ds.labels.reserve(count);
  constexpr std::size_t plane = kCifarSide * kCifarSide;
  for (std::size_t n = 0; n < count; ++n) {
    const std::uint8_t* rec = buf.data() + n * kCifarRecord;
    if (rec[0] > 9) throw DataError("'" + file.string() + "': label byte out of range");
    ds.labels.push_back(rec[0]);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < plane; ++p)
        ds.images[(n * plane + p) * 3 + c] = pixel_to_input(rec[1 + c * plane + p]);
  }
  return ds;
}

Dataset make_synthetic(const DatasetSpec& spec, std::size_t count, std::uint64_t seed,
                       double noise) {
  spec.validate();
  if (count == 0) throw ConfigError("synthetic dataset needs at least one sample");
  const std::size_t per = spec.s_in * spec.s_in * spec.c_in;

  // Prototypes depend only on the class layout, so train and test splits share them.
  std::mt19937_64 proto_rng(0x5eedu + spec.num_classes * 131 + per);
  std::uniform_real_distribution<double> uni(-0.6, 0.6);
  std::vector<std::vector<double>> prototypes(spec.num_classes, std::vector<double>(per));
  for (auto& p : prototypes)
    for (double& v : p) v = uni(proto_rng);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise);
  Dataset ds{Tensor({count, spec.s_in, spec.s_in, spec.c_in}), {}};
  ds.labels.resize(count);
  for (std::size_t n = 0; n < count; ++n) ds.labels[n] = static_cast<int>(n % spec.num_classes);
  std::shuffle(ds.labels.begin(), ds.labels.end(), rng);
  for (std::size_t n = 0; n < count; ++n) {
    const auto& proto = prototypes[static_cast<std::size_t>(ds.labels[n])];
    for (std::size_t i = 0; i < per; ++i)
      ds.images[n * per + i] = quantize_weight(std::clamp(proto[i] + gauss(rng), -1.0, 1.0), 8);
  }
  return ds;
}

Dataset load_dataset(const DatasetSpec& spec, const fs::path& dir, Split split, std::size_t limit,
                     std::uint64_t seed) {
  spec.validate();
  const bool train = split == Split::Train;
  Dataset ds;
  switch (spec.source) {
    case DataSource::IdxFiles: {
      const std::string prefix = train ? "train" : "t10k";
      ds = read_idx(dir / (prefix + "-images-idx3-ubyte"), dir / (prefix + "-labels-idx1-ubyte"),
                    spec.s_in, limit);
      break;
    }
    case DataSource::CifarBinary: {
      if (!train) {
        ds = read_cifar_binary(dir / "test_batch.bin", limit);
        break;
      }
      std::vector<Dataset> parts;
      std::size_t total = 0;
      for (int b = 1; b <= 5 && (!limit || total < limit); ++b) {
        const fs::path file = dir / ("data_batch_" + std::to_string(b) + ".bin");
        if (b > 1 && !fs::exists(file)) break;
        parts.push_back(read_cifar_binary(file, limit ? limit - total : 0));
        total += parts.back().size();
      }
      Shape shape = parts.front().images.shape();
      shape[0] = total;
      ds.images = Tensor(shape);
      std::size_t offset = 0;
      for (const Dataset& p : parts) {
        std::copy_n(p.images.data(), p.images.size(), ds.images.data() + offset);
        offset += p.images.size();
        ds.labels.insert(ds.labels.end(), p.labels.begin(), p.labels.end());
      }
      break;
    }
    case DataSource::Synthetic:
      return make_synthetic(spec, limit ? limit : 1000, train ? seed : seed ^ 0x7e57u);
  }
  const Shape& s = ds.images.shape();
  if (s[1] != spec.s_in || s[2] != spec.s_in || s[3] != spec.c_in)
    throw DataError("dataset '" + spec.name + "': files have geometry " + shape_string(s) +
                    ", expected " + std::to_string(spec.s_in) + "x" + std::to_string(spec.s_in) +
                    "x" + std::to_string(spec.c_in));
  for (int y : ds.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= spec.num_classes)
      throw DataError("dataset '" + spec.name + "': label " + std::to_string(y) + " out of range");
  return ds;
}

}  // namespace qnn
