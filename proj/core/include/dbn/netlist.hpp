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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dbn/data.hpp"
#include "dbn/gates.hpp"
#include "dbn/network.hpp"

namespace dbn {

/// Reference to a netlist signal: 0 and 1 are the constants, then the
/// primary inputs, then the gate nodes in topological order.
using Ref = std::uint32_t;

struct GateNode {
  GateOpcode op = GateOpcode::kFalse;
  Ref a = 0;
  Ref b = 0;
  bool operator==(const GateNode&) const = default;
};

struct GateNetlist {
  static constexpr Ref kConst0 = 0;
  static constexpr Ref kConst1 = 1;

  std::uint32_t input_count = 0;
  std::vector<GateNode> nodes;
  std::vector<std::vector<Ref>> class_outputs;
  double temperature = 1.0;

  Ref input_ref(std::size_t i) const { return static_cast<Ref>(2 + i); }
  Ref node_ref(std::size_t k) const { return static_cast<Ref>(2 + input_count + k); }
  bool is_const(Ref r) const { return r < 2; }
  bool is_input(Ref r) const { return r >= 2 && r < 2 + input_count; }
  bool is_node(Ref r) const { return r >= 2 + input_count; }
  std::size_t node_index(Ref r) const { return r - 2 - input_count; }
  std::size_t signal_count() const { return 2 + input_count + nodes.size(); }
  std::size_t class_count() const { return class_outputs.size(); }

  /// Throws FormatError unless every reference points strictly backwards and
  /// every class group is non-empty.
  void validate() const;
  bool operator==(const GateNetlist&) const = default;
};

/// Argmax gate per node; skip connectives become one gate per position.
GateNetlist harden(const NetworkModel& model);

enum class Pass : std::uint8_t { kConstFold, kCopyProp, kNegationFold, kDeadElim };

std::string_view pass_name(Pass p);
std::optional<Pass> pass_from_name(std::string_view name);
std::vector<Pass> default_passes();

GateNetlist run_pass(const GateNetlist& netlist, Pass pass);
/// Runs `passes` in order, repeated until the netlist stops changing.
GateNetlist optimize(const GateNetlist& netlist, std::span<const Pass> passes);

/// Value of every signal for one input vector (scalar reference path).
std::vector<std::uint8_t> eval_signals(const GateNetlist& netlist, std::span<const std::uint8_t> inputs);
std::vector<std::uint32_t> class_counts(const GateNetlist& netlist, std::span<const std::uint8_t> inputs);
std::uint32_t predict_scalar(const GateNetlist& netlist, std::span<const std::uint8_t> inputs);

inline constexpr std::size_t kLaneWidth = 64;
using Word = std::uint64_t;

/// One word per input bit; lane i of word j is bit j of example i.
struct BitSliceBatch {
  std::size_t lanes = 0;
  std::vector<Word> words;

  static BitSliceBatch pack(std::span<const BinarizedImage* const> examples);
  static BitSliceBatch pack_bits(std::span<const std::vector<std::uint8_t>> examples);
};

/// Word-parallel evaluator; reusable across batches of one netlist.
class BitSliceEvaluator {
 public:
  explicit BitSliceEvaluator(const GateNetlist& netlist);

  /// Pop-count of every class group per lane: result[lane][class].
  std::vector<std::vector<std::uint32_t>> class_counts(const BitSliceBatch& batch);
  std::vector<std::uint32_t> predict(const BitSliceBatch& batch);

 private:
  void run(const BitSliceBatch& batch);

  const GateNetlist& netlist_;
  std::vector<Word> signals_;
};

std::vector<std::uint32_t> eval_bitsliced(const GateNetlist& netlist, const BitSliceBatch& batch);

enum class NetlistFormat : std::uint8_t { kCompactBinary, kText };

inline constexpr std::array<char, 4> kNetlistMagic = {'B', 'N', 'L', 'C'};
inline constexpr std::uint16_t kNetlistVersion = 1;

std::vector<std::uint8_t> export_netlist(const GateNetlist& netlist, NetlistFormat format);
/// Detects the format from the leading bytes.
GateNetlist import_netlist(std::span<const std::uint8_t> bytes);
std::string to_text(const GateNetlist& netlist);
GateNetlist parse_text_netlist(std::string_view text);

struct NetlistStats {
  std::size_t input_count = 0;
  std::size_t node_count = 0;
  std::size_t class_count = 0;
  std::size_t output_refs = 0;
  std::size_t depth = 0;
  std::array<std::size_t, kGateCount> opcode_histogram{};
  /// Word-level logic operations for the gates plus pop-count additions.
  std::size_t bit_ops_per_inference = 0;
  bool operator==(const NetlistStats&) const = default;
};

NetlistStats netlist_stats(const GateNetlist& netlist);
std::string format_stats(const NetlistStats& stats);

}  // namespace dbn
