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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dbn/network.hpp"

namespace dbn {

inline constexpr std::array<char, 4> kModelMagic = {'D', 'B', 'N', 'M'};
inline constexpr std::uint16_t kModelVersion = 1;

/// Tagged payload appended after the model body (e.g. optimizer state).
struct Section {
  std::array<char, 4> tag{};
  std::vector<std::uint8_t> payload;
  bool operator==(const Section&) const = default;
};

/// Binary model container: header (magic, version, architecture name, input
/// shape, seed, binarization config, head), stages with 32-bit pair indices
/// and little-endian float32 logits, optional extra sections, CRC-32 trailer.
std::vector<std::uint8_t> serialize_model(const NetworkModel& model,
                                          std::span<const Section> sections = {});

/// Throws FormatError, VersionError or IntegrityError. Extra sections are
/// returned through `sections` when non-null and ignored otherwise.
NetworkModel deserialize_model(std::span<const std::uint8_t> bytes,
                               std::vector<Section>* sections = nullptr);

void save_model(const std::filesystem::path& path, const NetworkModel& model,
                std::span<const Section> sections = {});
NetworkModel load_model(const std::filesystem::path& path, std::vector<Section>* sections = nullptr);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace dbn
