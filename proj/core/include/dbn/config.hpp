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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dbn/data.hpp"
#include "dbn/network.hpp"
#include "dbn/training.hpp"

namespace dbn {

/// Everything a training run needs. Keys in the flat config file map one to
/// one onto these fields (see README for the schema).
struct RunConfig {
  // dataset.*
  std::string dataset_kind = "parity";  // parity | idx | cifar10 | cifar100
  std::filesystem::path dataset_dir;
  std::size_t parity_bits = 8;
  std::size_t train_limit = 0;  // 0 keeps every example
  std::size_t test_limit = 0;
  AugmentConfig augment;
  BinarizationConfig binarization;

  // arch.*
  std::string arch_name = "DBN";  // DBN, DBN-k or layered
  std::vector<std::size_t> widths;  // layered only
  PairingMode sampling = PairingMode::kRowCol;
  PairingMode hidden_pairing = PairingMode::kRandom;
  PairingMode head_pairing = PairingMode::kRandom;
  PairingMode layered_pairing = PairingMode::kAdjacent;
  bool skip = true;
  SkipConnective connective = SkipConnective::kImplication;
  bool bottleneck = true;
  double temperature = 100.0;
  std::size_t head_width = 0;
  double init_std = 1.0;

  // train.*
  TrainConfig train;

  // output.*
  std::filesystem::path output_dir = "run";

  /// Sets one key from its text value; throws ConfigError naming the key.
  void set(std::string_view key, std::string_view value);
  /// Effective config as a config file (every key, defaults included).
  std::string to_text() const;
  /// Range checks; with `check_paths` also that the dataset files exist.
  void validate(bool check_paths) const;
  bool operator==(const RunConfig&) const = default;
};

/// Every recognised key in file order.
std::vector<std::string> run_config_keys();

/// Parses `key = value` lines ('#' starts a comment). Errors name the line.
RunConfig parse_run_config(std::string_view text, std::string_view source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies "key=value" overrides in order.
void apply_overrides(RunConfig& cfg, std::span<const std::string> overrides);

struct RunData {
  LabeledDataset train;
  LabeledDataset test;  // empty for parity (evaluate on train)
};

/// Loads the configured dataset. Parity data is generated in memory.
RunData load_run_data(const RunConfig& cfg);

/// Builds the initial model for the configured architecture and data.
NetworkModel build_run_model(const RunConfig& cfg, const LabeledDataset& train);

}  // namespace dbn
