#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "sclb/rng.hpp"
#include "sclb/tensor.hpp"

namespace sclb {

/// Images stay in byte form until batching; standardization constants come
/// from the training split and are copied onto the splits evaluated with it.
struct Dataset {
  std::size_t count = 0, channels = 0, height = 0, width = 0;
  std::vector<std::uint8_t> images;  // [count, channels, height, width]
  std::vector<std::uint8_t> labels;
  std::uint32_t num_classes = 0;
  std::vector<double> channel_mean, channel_std;

  std::size_t image_bytes() const { return channels * height * width; }
  const std::uint8_t* image(std::size_t i) const { return images.data() + i * image_bytes(); }
  std::uint8_t* image(std::size_t i) { return images.data() + i * image_bytes(); }

  bool has_stats() const { return !channel_mean.empty(); }
};

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open '" + path + "'");
  f.seekg(0, std::ios::end);
  const std::streamoff size = f.tellg();
  f.seekg(0);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(size));
  f.read(reinterpret_cast<char*>(buf.data()), size);
  if (!f) throw FormatError("short read from '" + path + "'");
  return buf;
}

inline std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline void write_be32(std::ofstream& f, std::uint32_t v) {
  const std::uint8_t b[4] = {std::uint8_t(v >> 24), std::uint8_t(v >> 16), std::uint8_t(v >> 8), std::uint8_t(v)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// MNIST IDX format

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

inline std::vector<std::uint8_t> load_idx_images(const std::string& path, std::uint32_t& n,
                                                 std::uint32_t& h, std::uint32_t& w) {
  const auto buf = detail::read_file(path);
  if (buf.size() < 16) throw FormatError("'" + path + "': truncated IDX header (size " + std::to_string(buf.size()) + ")");
  const std::uint32_t magic = detail::read_be32(buf.data());
  if (magic != kIdxImagesMagic)
    throw FormatError("'" + path + "': bad image magic at offset 0 (got " + std::to_string(magic) + ")");
  n = detail::read_be32(buf.data() + 4);
  h = detail::read_be32(buf.data() + 8);
  w = detail::read_be32(buf.data() + 12);
  const std::size_t want = 16 + std::size_t(n) * h * w;
  if (buf.size() != want)
    throw FormatError("'" + path + "': expected " + std::to_string(want) + " bytes, found " +
                      std::to_string(buf.size()) + " (mismatch at offset " +
                      std::to_string(std::min(buf.size(), want)) + ")");
  return {buf.begin() + 16, buf.end()};
}

inline std::vector<std::uint8_t> load_idx_labels(const std::string& path, std::uint32_t& n) {
  const auto buf = detail::read_file(path);
  if (buf.size() < 8) throw FormatError("'" + path + "': truncated IDX header (size " + std::to_string(buf.size()) + ")");
  const std::uint32_t magic = detail::read_be32(buf.data());
  if (magic != kIdxLabelsMagic)
    throw FormatError("'" + path + "': bad label magic at offset 0 (got " + std::to_string(magic) + ")");
  n = detail::read_be32(buf.data() + 4);
  const std::size_t want = 8 + n;
  if (buf.size() != want)
    throw FormatError("'" + path + "': expected " + std::to_string(want) + " bytes, found " +
                      std::to_string(buf.size()) + " (mismatch at offset " +
                      std::to_string(std::min(buf.size(), want)) + ")");
  return {buf.begin() + 8, buf.end()};
}

inline Dataset load_mnist_split(const std::string& images_path, const std::string& labels_path) {
  Dataset ds;
  std::uint32_t n = 0, h = 0, w = 0, nl = 0;
  ds.images = load_idx_images(images_path, n, h, w);
  ds.labels = load_idx_labels(labels_path, nl);
  if (n != nl)
    throw FormatError("label count " + std::to_string(nl) + " in '" + labels_path +
                      "' does not match image count " + std::to_string(n));
  ds.count = n;
  ds.channels = 1;
  ds.height = h;
  ds.width = w;
  ds.num_classes = 10;
  return ds;
}

/// Standard IDX file names: train-images-idx3-ubyte / train-labels-idx1-ubyte
/// and t10k-images-idx3-ubyte / t10k-labels-idx1-ubyte.
inline std::pair<Dataset, Dataset> load_mnist(const std::string& dir) {
  return {load_mnist_split(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte"),
          load_mnist_split(dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte")};
}

inline void write_idx_images(const std::string& path, const Dataset& ds) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write '" + path + "'");
  detail::write_be32(f, kIdxImagesMagic);
  detail::write_be32(f, static_cast<std::uint32_t>(ds.count));
  detail::write_be32(f, static_cast<std::uint32_t>(ds.height));
  detail::write_be32(f, static_cast<std::uint32_t>(ds.width));
  f.write(reinterpret_cast<const char*>(ds.images.data()), static_cast<std::streamsize>(ds.images.size()));
  if (!f) throw FormatError("write failed for '" + path + "'");
}

inline void write_idx_labels(const std::string& path, const Dataset& ds) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write '" + path + "'");
  detail::write_be32(f, kIdxLabelsMagic);
  detail::write_be32(f, static_cast<std::uint32_t>(ds.count));
  f.write(reinterpret_cast<const char*>(ds.labels.data()), static_cast<std::streamsize>(ds.labels.size()));
  if (!f) throw FormatError("write failed for '" + path + "'");
}

inline void write_mnist(const std::string& dir, const Dataset& train, const Dataset& test) {
  std::filesystem::create_directories(dir);
  write_idx_images(dir + "/train-images-idx3-ubyte", train);
  write_idx_labels(dir + "/train-labels-idx1-ubyte", train);
  write_idx_images(dir + "/t10k-images-idx3-ubyte", test);
  write_idx_labels(dir + "/t10k-labels-idx1-ubyte", test);
}

// ---------------------------------------------------------------------------
// CIFAR binary format: per record, label byte(s) then 3072 channel-major
// pixel bytes. CIFAR-100 prepends a coarse label byte before the fine label.

namespace detail {

inline void parse_cifar_file(const std::string& path, std::size_t label_bytes, Dataset& ds) {
  const auto buf = read_file(path);
  const std::size_t record = label_bytes + 3072;
  if (buf.size() % record != 0)
    throw FormatError("'" + path + "': size " + std::to_string(buf.size()) +
                      " is not a multiple of the record size " + std::to_string(record) +
                      " (truncated at offset " + std::to_string((buf.size() / record) * record) + ")");
  const std::size_t n = buf.size() / record;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* rec = buf.data() + i * record;
    const std::uint8_t label = rec[label_bytes - 1];  // fine label for CIFAR-100
    if (label >= ds.num_classes)
      throw FormatError("'" + path + "': label " + std::to_string(label) + " out of range at offset " +
                        std::to_string(i * record + label_bytes - 1));
    ds.labels.push_back(label);
    ds.images.insert(ds.images.end(), rec + label_bytes, rec + record);
  }
  ds.count += n;
}

}  // namespace detail

inline std::pair<Dataset, Dataset> load_cifar10(const std::string& dir) {
  Dataset train, test;
  for (Dataset* ds : {&train, &test}) {
    ds->channels = 3;
    ds->height = 32;
    ds->width = 32;
    ds->num_classes = 10;
  }
  for (int i = 1; i <= 5; ++i)
    detail::parse_cifar_file(dir + "/data_batch_" + std::to_string(i) + ".bin", 1, train);
  detail::parse_cifar_file(dir + "/test_batch.bin", 1, test);
  return {std::move(train), std::move(test)};
}

inline std::pair<Dataset, Dataset> load_cifar100(const std::string& dir) {
  Dataset train, test;
  for (Dataset* ds : {&train, &test}) {
    ds->channels = 3;
    ds->height = 32;
    ds->width = 32;
    ds->num_classes = 100;
  }
  detail::parse_cifar_file(dir + "/train.bin", 2, train);
  detail::parse_cifar_file(dir + "/test.bin", 2, test);
  return {std::move(train), std::move(test)};
}

inline void write_cifar10_batch(const std::string& path, const Dataset& ds) {
  if (ds.channels != 3 || ds.height != 32 || ds.width != 32)
    throw ConfigError("cifar batch writer expects 3x32x32 images");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write '" + path + "'");
  for (std::size_t i = 0; i < ds.count; ++i) {
    f.put(static_cast<char>(ds.labels[i]));
    f.write(reinterpret_cast<const char*>(ds.image(i)), static_cast<std::streamsize>(ds.image_bytes()));
  }
  if (!f) throw FormatError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Standardization and batching

/// Per-channel mean and population std of images scaled to [0,1]; double
/// accumulation over the whole split. A constant channel gets std 1.
inline void compute_channel_stats(Dataset& ds) {
  const std::size_t hw = ds.height * ds.width;
  ds.channel_mean.assign(ds.channels, 0.0);
  ds.channel_std.assign(ds.channels, 0.0);
  const double inv = 1.0 / (255.0);
  const double m = static_cast<double>(ds.count * hw);
  for (std::size_t c = 0; c < ds.channels; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < ds.count; ++i) {
      const std::uint8_t* img = ds.image(i) + c * hw;
      for (std::size_t p = 0; p < hw; ++p) sum += img[p] * inv;
    }
    const double mean = sum / m;
    double sq = 0.0;
    for (std::size_t i = 0; i < ds.count; ++i) {
      const std::uint8_t* img = ds.image(i) + c * hw;
      for (std::size_t p = 0; p < hw; ++p) {
        const double d = img[p] * inv - mean;
        sq += d * d;
      }
    }
    const double var = sq / m;
    ds.channel_mean[c] = mean;
    ds.channel_std[c] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
}

inline void copy_channel_stats(const Dataset& from, Dataset& to) {
  to.channel_mean = from.channel_mean;
  to.channel_std = from.channel_std;
}

struct AugmentConfig {
  std::uint32_t pad = 0;  // random-crop padding (reflect)
  bool hflip = false;
  bool enabled = false;
};

namespace detail {

/// Reflect-101 index: ...3 2 1 | 0 1 2 3 | 2 1 0...
inline std::size_t reflect_index(std::ptrdiff_t p, std::size_t s) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(s);
  while (p < 0 || p >= n) {
    if (p < 0) p = -p;
    if (p >= n) p = 2 * n - 2 - p;
  }
  return static_cast<std::size_t>(p);
}

}  // namespace detail

/// Gathers the indexed images into a standardized [N,C,H,W] tensor.
/// Augmentation (reflect-pad + random crop, horizontal flip with probability
/// 1/2) is deterministic given the seed.
template <typename T>
Tensor<T> make_batch(const Dataset& ds, const std::vector<std::uint32_t>& indices,
                     const AugmentConfig& aug, std::uint64_t seed) {
  if (!ds.has_stats()) throw ConfigError("make_batch: dataset has no standardization stats");
  const std::size_t n = indices.size(), c = ds.channels, h = ds.height, w = ds.width;
  if (aug.enabled && aug.pad >= h) throw ConfigError("make_batch: crop padding must be smaller than the image");
  Tensor<T> out({n, c, h, w});
  RandomEngine rng(seed);
  const double inv = 1.0 / 255.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (indices[i] >= ds.count) throw ConfigError("make_batch: index out of range");
    const std::uint8_t* img = ds.image(indices[i]);
    std::uint32_t dy = 0, dx = 0;
    bool flip = false;
    if (aug.enabled) {
      if (aug.pad > 0) {
        dy = static_cast<std::uint32_t>(rng.uniform_index(2 * aug.pad + 1));
        dx = static_cast<std::uint32_t>(rng.uniform_index(2 * aug.pad + 1));
      }
      if (aug.hflip) flip = rng.bernoulli(0.5);
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double mean = ds.channel_mean[ch];
      const double istd = 1.0 / ds.channel_std[ch];
      const std::uint8_t* src = img + ch * h * w;
      T* dst = out.data() + ((i * c + ch) * h) * w;
      for (std::size_t y = 0; y < h; ++y) {
        const std::size_t sy = detail::reflect_index(
            static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(aug.pad), h);
        for (std::size_t x = 0; x < w; ++x) {
          const std::size_t col = flip ? (w - 1 - x) : x;
          const std::size_t sx = detail::reflect_index(
              static_cast<std::ptrdiff_t>(col + dx) - static_cast<std::ptrdiff_t>(aug.pad), w);
          dst[y * w + x] = static_cast<T>((src[sy * w + sx] * inv - mean) * istd);
        }
      }
    }
  }
  return out;
}

inline std::vector<std::uint32_t> labels_for(const Dataset& ds, const std::vector<std::uint32_t>& indices) {
  std::vector<std::uint32_t> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) out[i] = ds.labels[indices[i]];
  return out;
}

inline Dataset subset(const Dataset& ds, const std::vector<std::uint32_t>& indices) {
  Dataset out;
  out.channels = ds.channels;
  out.height = ds.height;
  out.width = ds.width;
  out.num_classes = ds.num_classes;
  out.channel_mean = ds.channel_mean;
  out.channel_std = ds.channel_std;
  out.count = indices.size();
  out.images.reserve(indices.size() * ds.image_bytes());
  out.labels.reserve(indices.size());
  for (std::uint32_t i : indices) {
    out.images.insert(out.images.end(), ds.image(i), ds.image(i) + ds.image_bytes());
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

/// Disjoint seeded split covering the dataset; the validation part gets
/// round(val_fraction * count) examples.
inline std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, double val_fraction,
                                                   std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw ConfigError("split: val_fraction must be in (0,1)");
  std::vector<std::uint32_t> idx(ds.count);
  for (std::size_t i = 0; i < ds.count; ++i) idx[i] = static_cast<std::uint32_t>(i);
  RandomEngine rng(mix_seed(seed, 0x73706c69ULL));
  rng.shuffle(idx);
  const std::size_t n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(ds.count)));
  std::vector<std::uint32_t> val_idx(idx.begin(), idx.begin() + n_val);
  std::vector<std::uint32_t> train_idx(idx.begin() + n_val, idx.end());
  return {subset(ds, train_idx), subset(ds, val_idx)};
}

}  // namespace sclb
