// Copyright 2026 The DBN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dbn/data.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <string>

#include "dbn/error.hpp"

namespace dbn {
namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

// Returns the dimension list of an IDX file after checking its magic.
std::vector<std::uint32_t> idx_header(const std::vector<std::uint8_t>& b,
                                      std::uint8_t expected_dims, const std::string& name) {
  if (b.size() < 4 || b[0] != 0 || b[1] != 0 || b[2] != 0x08 || b[3] != expected_dims) {
    throw FormatError(name + ": bad IDX magic");
  }
  if (b.size() < 4 + 4 * std::size_t{expected_dims}) {
    throw TruncationError(name + ": truncated IDX header");
  }
  std::vector<std::uint32_t> dims(expected_dims);
  for (std::size_t i = 0; i < expected_dims; ++i) dims[i] = read_be32(b, 4 + 4 * i);
  return dims;
}

}  // namespace

RawImage::RawImage(std::size_t c, std::size_t h, std::size_t w)
    : channels(c), height(h), width(w), pixels(c * h * w, 0) {}

RawImage::RawImage(std::size_t c, std::size_t h, std::size_t w, std::vector<std::uint8_t> px)
    : channels(c), height(h), width(w), pixels(std::move(px)) {
  if (pixels.size() != c * h * w) throw ShapeError("pixel count does not match image shape");
}

void BinarizationConfig::validate() const {
  if (threshold_count < 1) throw ConfigError("threshold_count must be >= 1");
  if (intensity_high > 255) throw ConfigError("intensity_high must be <= 255");
  if (intensity_low >= intensity_high) throw ConfigError("intensity_low must be < intensity_high");
}

double BinarizationConfig::threshold(std::uint32_t k) const {
  return intensity_low + static_cast<double>(k) * (intensity_high - intensity_low) /
                             static_cast<double>(threshold_count + 1);
}

void LabeledDataset::validate() const {
  if (examples.empty()) throw SizeError("dataset is empty");
  for (const auto& ex : examples) {
    if (ex.label >= class_count) {
      throw FormatError("label " + std::to_string(ex.label) + " out of range for " +
                        std::to_string(class_count) + " classes");
    }
  }
}

LabeledDataset LabeledDataset::head(std::size_t n) const { return slice(0, std::min(n, size())); }

LabeledDataset LabeledDataset::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, size());
  begin = std::min(begin, end);
  LabeledDataset out;
  out.class_count = class_count;
  out.examples.assign(examples.begin() + static_cast<std::ptrdiff_t>(begin),
                      examples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

std::vector<RawImage> load_idx_images(const std::filesystem::path& images) {
  const auto bytes = slurp(images);
  const auto dims = idx_header(bytes, 3, images.string());
  const std::size_t count = dims[0], rows = dims[1], cols = dims[2];
  const std::size_t header = 16;
  const std::size_t need = count * rows * cols;
  if (bytes.size() - header < need) throw TruncationError(images.string() + ": truncated payload");
  std::vector<RawImage> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto* p = bytes.data() + header + i * rows * cols;
    out.emplace_back(1, rows, cols, std::vector<std::uint8_t>(p, p + rows * cols));
  }
  return out;
}

std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& labels) {
  const auto bytes = slurp(labels);
  const auto dims = idx_header(bytes, 1, labels.string());
  const std::size_t header = 8;
  if (bytes.size() - header < dims[0]) throw TruncationError(labels.string() + ": truncated payload");
  return {bytes.begin() + header, bytes.begin() + static_cast<std::ptrdiff_t>(header + dims[0])};
}

LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                        std::uint32_t class_count) {
  auto imgs = load_idx_images(images);
  const auto labs = load_idx_labels(labels);
  if (imgs.size() != labs.size()) {
    throw FormatError("image/label count mismatch: " + std::to_string(imgs.size()) + " images, " +
                      std::to_string(labs.size()) + " labels");
  }
  LabeledDataset ds;
  ds.class_count = class_count;
  ds.examples.reserve(imgs.size());
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    ds.examples.push_back({std::move(imgs[i]), labs[i]});
  }
  ds.validate();
  return ds;
}

LabeledDataset load_cifar_binary(const std::filesystem::path& path, bool cifar100, bool coarse) {
  constexpr std::size_t kPixels = 3 * 32 * 32;
  const std::size_t label_bytes = cifar100 ? 2 : 1;
  const std::size_t record = label_bytes + kPixels;
  const auto bytes = slurp(path);
  if (bytes.empty() || bytes.size() % record != 0) {
    throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) +
                      " is not a multiple of the " + std::to_string(record) + "-byte record");
  }
  LabeledDataset ds;
  ds.class_count = cifar100 ? (coarse ? 20 : 100) : 10;
  const std::size_t n = bytes.size() / record;
  ds.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto* rec = bytes.data() + i * record;
    // CIFAR-100 records are <coarse label><fine label><pixels>.
    const std::uint32_t label = cifar100 ? (coarse ? rec[0] : rec[1]) : rec[0];
    const auto* px = rec + label_bytes;
    ds.examples.push_back({RawImage(3, 32, 32, std::vector<std::uint8_t>(px, px + kPixels)), label});
  }
  ds.validate();
  return ds;
}

RawImage flip_horizontal(const RawImage& img) {
  RawImage out(img.channels, img.height, img.width);
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t r = 0; r < img.height; ++r)
      for (std::size_t x = 0; x < img.width; ++x) out.at(c, r, x) = img.at(c, r, img.width - 1 - x);
  return out;
}

RawImage pad_crop(const RawImage& img, std::size_t pad, std::size_t row_offset,
                  std::size_t col_offset) {
  RawImage out(img.channels, img.height, img.width);
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (std::size_t r = 0; r < img.height; ++r) {
      // Row in the original image; out of range lands in the zero padding.
      const std::ptrdiff_t src_r = static_cast<std::ptrdiff_t>(r + row_offset) - static_cast<std::ptrdiff_t>(pad);
      if (src_r < 0 || src_r >= static_cast<std::ptrdiff_t>(img.height)) continue;
      for (std::size_t x = 0; x < img.width; ++x) {
        const std::ptrdiff_t src_c = static_cast<std::ptrdiff_t>(x + col_offset) - static_cast<std::ptrdiff_t>(pad);
        if (src_c < 0 || src_c >= static_cast<std::ptrdiff_t>(img.width)) continue;
        out.at(c, r, x) = img.at(c, static_cast<std::size_t>(src_r), static_cast<std::size_t>(src_c));
      }
    }
  }
  return out;
}

RawImage augment(const RawImage& img, Rng& rng, const AugmentConfig& cfg) {
  RawImage out = img;
  if (cfg.horizontal_flip) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u < cfg.flip_probability) out = flip_horizontal(out);
  }
  if (cfg.pad_crop) {
    const std::size_t span = 2 * cfg.crop_padding + 1;
    const std::size_t dr = uniform_index(rng, span);
    const std::size_t dc = uniform_index(rng, span);
    out = pad_crop(out, cfg.crop_padding, dr, dc);
  }
  return out;
}

InputShape binarized_shape(std::size_t channels, std::size_t height, std::size_t width,
                           const BinarizationConfig& cfg) {
  return {channels, cfg.threshold_count, height, width};
}

BinarizedImage binarize(const RawImage& img, const BinarizationConfig& cfg) {
  cfg.validate();
  BinarizedImage out;
  out.shape = binarized_shape(img.channels, img.height, img.width, cfg);
  out.bits.assign(out.shape.size(), 0);
  std::vector<double> thresholds(cfg.threshold_count);
  for (std::uint32_t k = 0; k < cfg.threshold_count; ++k) thresholds[k] = cfg.threshold(k + 1);
  const double lo = cfg.intensity_low, hi = cfg.intensity_high;
  const std::size_t plane = img.height * img.width;
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      const double v = std::clamp<double>(img.pixels[c * plane + p], lo, hi);
      for (std::uint32_t k = 0; k < cfg.threshold_count; ++k) {
        if (v < thresholds[k]) break;
        out.bits[(c * cfg.threshold_count + k) * plane + p] = 1;
      }
    }
  }
  return out;
}

LabeledDataset make_parity_dataset(std::size_t bits) {
  if (bits == 0 || bits > 16) throw SizeError("parity dataset needs 1 <= bits <= 16");
  LabeledDataset ds;
  ds.class_count = 2;
  const std::size_t n = std::size_t{1} << bits;
  ds.examples.reserve(n);
  for (std::size_t v = 0; v < n; ++v) {
    BinarizedImage img;
    img.shape = {1, 1, 1, bits};
    img.bits.resize(bits);
    std::uint32_t parity = 0;
    for (std::size_t i = 0; i < bits; ++i) {
      img.bits[i] = static_cast<std::uint8_t>((v >> (bits - 1 - i)) & 1);
      parity ^= img.bits[i];
    }
    ds.examples.push_back({std::move(img), parity});
  }
  return ds;
}

BinarizedImage as_binarized(const Example& ex, const BinarizationConfig& cfg) {
  if (const auto* raw = std::get_if<RawImage>(&ex.input)) return binarize(*raw, cfg);
  return std::get<BinarizedImage>(ex.input);
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  // Largest multiple of n that fits; draws above it are rejected.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

void shuffle_indices(std::span<std::size_t> idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
  }
}

}  // namespace dbn
