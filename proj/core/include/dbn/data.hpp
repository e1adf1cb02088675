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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace dbn {

/// Channel-major 8-bit image, pixel (c, r, col) at (c * height + r) * width + col.
struct RawImage {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  RawImage() = default;
  RawImage(std::size_t c, std::size_t h, std::size_t w);
  RawImage(std::size_t c, std::size_t h, std::size_t w, std::vector<std::uint8_t> px);

  std::uint8_t at(std::size_t c, std::size_t r, std::size_t col) const {
    return pixels[(c * height + r) * width + col];
  }
  std::uint8_t& at(std::size_t c, std::size_t r, std::size_t col) {
    return pixels[(c * height + r) * width + col];
  }
  bool operator==(const RawImage&) const = default;
};

struct BinarizationConfig {
  std::uint32_t threshold_count = 31;
  std::uint32_t intensity_low = 0;
  std::uint32_t intensity_high = 255;

  /// Throws ConfigError when the ranges are invalid.
  void validate() const;
  /// Threshold k (1-based) placed strictly inside (low, high).
  double threshold(std::uint32_t k) const;
  bool operator==(const BinarizationConfig&) const = default;
};

/// Layout of the binarized input: (channels, thresholds, height, width).
struct InputShape {
  std::size_t channels = 1;
  std::size_t thresholds = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const { return channels * thresholds * height * width; }
  std::size_t index(std::size_t c, std::size_t t, std::size_t r, std::size_t col) const {
    return ((c * thresholds + t) * height + r) * width + col;
  }
  bool operator==(const InputShape&) const = default;
};

/// Thermometer-coded bit planes; one byte (0 or 1) per bit.
struct BinarizedImage {
  InputShape shape;
  std::vector<std::uint8_t> bits;

  bool bit(std::size_t c, std::size_t t, std::size_t r, std::size_t col) const {
    return bits[shape.index(c, t, r, col)] != 0;
  }
  bool operator==(const BinarizedImage&) const = default;
};

struct Example {
  std::variant<RawImage, BinarizedImage> input;
  std::uint32_t label = 0;
};

struct LabeledDataset {
  std::vector<Example> examples;
  std::uint32_t class_count = 0;

  std::size_t size() const { return examples.size(); }
  /// Throws if empty or if any label is out of range.
  void validate() const;
  /// First `n` examples (or all if n >= size()).
  LabeledDataset head(std::size_t n) const;
  /// Examples [begin, end).
  LabeledDataset slice(std::size_t begin, std::size_t end) const;
};

/// Reads an IDX image file and its matching IDX label file.
LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                        std::uint32_t class_count = 10);
/// Reads only an IDX3 image file (labels all zero); used for header checks.
std::vector<RawImage> load_idx_images(const std::filesystem::path& images);
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& labels);

/// Reads one CIFAR-10 (coarse == false, 3073-byte records) or CIFAR-100
/// (3074-byte records; fine label unless `coarse`) binary batch file.
LabeledDataset load_cifar_binary(const std::filesystem::path& path, bool cifar100 = false,
                                 bool coarse = false);

struct AugmentConfig {
  bool horizontal_flip = false;
  double flip_probability = 0.5;
  bool pad_crop = false;
  std::size_t crop_padding = 4;

  bool any() const { return horizontal_flip || pad_crop; }
  bool operator==(const AugmentConfig&) const = default;
};

using Rng = std::mt19937_64;

RawImage augment(const RawImage& img, Rng& rng, const AugmentConfig& cfg);
RawImage flip_horizontal(const RawImage& img);
/// Zero-pads by `pad` on every side, then crops a height x width window whose
/// top-left corner is (row_offset, col_offset) in padded coordinates.
RawImage pad_crop(const RawImage& img, std::size_t pad, std::size_t row_offset,
                  std::size_t col_offset);

BinarizedImage binarize(const RawImage& img, const BinarizationConfig& cfg);
InputShape binarized_shape(std::size_t channels, std::size_t height, std::size_t width,
                           const BinarizationConfig& cfg);

/// All 2^n bit strings labelled by their XOR; bit 0 is the most significant.
LabeledDataset make_parity_dataset(std::size_t bits);

/// Binarized view of one example: binarizes raw images, copies bit images.
BinarizedImage as_binarized(const Example& ex, const BinarizationConfig& cfg);

/// Uniform integer in [0, n) with rejection sampling; stable across platforms.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);
/// Fisher-Yates shuffle driven by uniform_index.
void shuffle_indices(std::span<std::size_t> idx, Rng& rng);

}  // namespace dbn
