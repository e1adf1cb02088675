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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dbn/data.hpp"
#include "dbn/gates.hpp"

namespace dbn {

/// How a layer chooses the input pair of each output node.
enum class PairingMode : std::uint8_t {
  kRowCol = 0,      // right and below neighbours within one bit plane
  kRowColDiag = 1,  // plus the diagonal neighbour
  kRandom = 2,      // seeded uniform pairing, fixed after construction
  kAdjacent = 3,    // (m, m + 1 mod d) with m spread evenly over the input
};

std::string_view pairing_name(PairingMode mode);
std::optional<PairingMode> pairing_from_name(std::string_view name);

/// Input pair (first[o], second[o]) of every output node o.
struct PairIndexTable {
  std::vector<std::uint32_t> first;
  std::vector<std::uint32_t> second;

  std::size_t size() const { return first.size(); }
  bool operator==(const PairIndexTable&) const = default;
};

/// Locality pairs over a binarized image layout. Row+col gives 2 pairs per
/// position (node 2p pairs p with its right neighbour, node 2p+1 with the one
/// below); row+col+diag gives 3. Neighbours wrap at plane edges and never
/// leave their (channel, threshold) plane. Random and adjacent modes treat
/// the shape as a flat vector and need `out_width`.
PairIndexTable build_locality_pairs(const InputShape& shape, PairingMode mode,
                                    std::size_t out_width = 0, std::uint64_t seed = 0);

/// Pairs over a flat input of `in_width` (random or adjacent modes).
PairIndexTable build_flat_pairs(std::size_t in_width, std::size_t out_width, PairingMode mode,
                                std::uint64_t seed);

struct BooleanLayer {
  std::size_t in_width = 0;
  std::size_t out_width = 0;
  PairingMode pairing = PairingMode::kRandom;
  PairIndexTable pairs;
  std::vector<float> logits;  // out_width x 16, row-major

  /// Layer with Gaussian(0, init_std) logits.
  static BooleanLayer create(std::size_t in_width, PairIndexTable pairs, PairingMode pairing,
                             Rng& rng, double init_std = 1.0);

  std::span<const float> row(std::size_t o) const {
    return {logits.data() + o * kGateCount, kGateCount};
  }
  std::span<float> row(std::size_t o) { return {logits.data() + o * kGateCount, kGateCount}; }
  /// argmax of the node's logits, ties to the lowest opcode.
  GateOpcode hard_opcode(std::size_t o) const;
  /// Softmax of the node's logits.
  std::array<double, kGateCount> probabilities(std::size_t o) const;
  void validate() const;
  bool operator==(const BooleanLayer&) const = default;
};

/// Two Boolean layers followed by an elementwise connective between the
/// block input (operand A) and the second layer's output (operand B).
struct SkipBlock {
  BooleanLayer layer_a;
  BooleanLayer layer_b;
  SkipConnective connective = SkipConnective::kImplication;
  std::vector<float> learned_logits;  // width x 16 when connective == kLearned

  std::size_t width() const { return layer_b.out_width; }
  GateOpcode connective_opcode_at(std::size_t i) const;
  void validate() const;
  bool operator==(const SkipBlock&) const = default;
};

struct VotingHead {
  std::uint32_t class_count = 2;
  double temperature = 100.0;

  std::size_t per_class(std::size_t output_width) const;
  bool operator==(const VotingHead&) const = default;
};

using Stage = std::variant<BooleanLayer, SkipBlock>;

struct NetworkModel {
  std::string architecture = "custom";
  InputShape input_shape;
  BinarizationConfig binarization;
  PairingMode sampling = PairingMode::kRowCol;
  std::uint64_t seed = 0;
  std::vector<Stage> stages;
  VotingHead head;

  std::size_t input_width() const { return input_shape.size(); }
  std::size_t output_width() const;
  /// Sum of Boolean layer output widths (connective gates excluded).
  std::size_t node_count() const;
  /// node_count() plus one gate per skip-block position.
  std::size_t gate_count() const;
  /// Output widths of every Boolean layer in forward order.
  std::vector<std::size_t> layer_widths() const;
  std::size_t skip_block_count() const;
  /// Throws ConfigError/ShapeError on inconsistent widths or logits.
  void validate() const;
  bool operator==(const NetworkModel&) const = default;
};

std::vector<double> layer_forward_soft(const BooleanLayer& layer, std::span<const double> x);
std::vector<std::uint8_t> layer_forward_hard(const BooleanLayer& layer,
                                             std::span<const std::uint8_t> x);

std::vector<double> skip_forward_soft(const SkipBlock& block, std::span<const double> x);
std::vector<std::uint8_t> skip_forward_hard(const SkipBlock& block,
                                            std::span<const std::uint8_t> x);

/// Class scores (1/Z) * sum over each contiguous class segment.
std::vector<double> voting_forward(const VotingHead& head, std::span<const double> x);
std::vector<double> voting_forward(const VotingHead& head, std::span<const std::uint8_t> x);

/// Output of every stage (soft); element 0 is the input itself.
std::vector<std::vector<double>> forward_soft_trace(const NetworkModel& model,
                                                    std::span<const double> x);
std::vector<std::vector<std::uint8_t>> forward_hard_trace(const NetworkModel& model,
                                                          std::span<const std::uint8_t> x);

std::vector<double> class_scores(const NetworkModel& model, const BinarizedImage& img, bool hard);
/// argmax with ties broken towards the lowest index.
std::uint32_t argmax_class(std::span<const double> scores);
std::uint32_t predict(const NetworkModel& model, const BinarizedImage& img, bool hard);

struct ArchitectureOptions {
  std::string name = "DBN";  // "DBN" or "DBN-k"
  InputShape input_shape;
  BinarizationConfig binarization;
  std::uint32_t class_count = 10;
  PairingMode sampling = PairingMode::kRowCol;
  PairingMode hidden_pairing = PairingMode::kRandom;
  PairingMode head_pairing = PairingMode::kRandom;
  SkipConnective connective = SkipConnective::kImplication;
  bool skip = true;
  bool bottleneck = true;
  double temperature = 100.0;
  /// Pre-voting width; 0 selects class_count * (w - w mod class_count)
  /// where w is the sampling width.
  std::size_t head_width = 0;
  std::uint64_t seed = 0;
  double init_std = 1.0;
};

/// Parses "DBN" (k = 0) or "DBN-k"; throws ConfigError otherwise.
std::size_t parse_block_count(std::string_view name);

/// Sampling layer, k skip blocks, pre-voting layer, voting head.
NetworkModel build_architecture(const ArchitectureOptions& opts);

/// Plain stack of Boolean layers over a flat input; used for small
/// synthetic problems such as parity.
NetworkModel build_layered(const InputShape& input, std::span<const std::size_t> widths,
                           PairingMode pairing, std::uint32_t class_count, double temperature,
                           std::uint64_t seed, double init_std = 1.0);

/// Logit given to the selected gate of a one-hot row. exp(-kOneHotLogit)
/// underflows to zero in double precision, so the softmax is exactly one-hot.
inline constexpr float kOneHotLogit = 1000.0f;

/// Replaces every logit row by a one-hot row (value `scale`) on its argmax.
void harden_logits(NetworkModel& model, float scale = kOneHotLogit);

/// Every trainable logit array, in forward order.
std::vector<std::span<float>> parameter_blocks(NetworkModel& model);
std::vector<std::span<const float>> parameter_blocks(const NetworkModel& model);

}  // namespace dbn
