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
#include <optional>
#include <string_view>
#include <utility>

namespace dbn {

/// The sixteen two-input Boolean functions. The numeric value is part of the
/// model and netlist file formats and must not be reordered.
enum class GateOpcode : std::uint8_t {
  kFalse = 0,
  kAnd = 1,
  kAAndNotB = 2,
  kA = 3,
  kNotAAndB = 4,
  kB = 5,
  kXor = 6,
  kOr = 7,
  kNor = 8,
  kXnor = 9,
  kNotB = 10,
  kAOrNotB = 11,
  kNotA = 12,
  kImplication = 13,  // NOT A OR B
  kNand = 14,
  kTrue = 15,
};

inline constexpr int kGateCount = 16;

enum class Operand : std::uint8_t { kA, kB };

constexpr GateOpcode opcode_from_index(int index) {
  return static_cast<GateOpcode>(index & 0xF);
}
constexpr int opcode_index(GateOpcode op) { return static_cast<int>(op); }

/// Truth table as 4 bits; bit (2a + b) holds op(a, b).
constexpr std::uint8_t truth_table(GateOpcode op) {
  // Rows (0,0),(0,1),(1,0),(1,1) are bits 0..3. The opcode index lists the
  // outputs with (0,0) as its most significant bit.
  const int i = opcode_index(op);
  return static_cast<std::uint8_t>(((i >> 3) & 1) | (((i >> 2) & 1) << 1) |
                                   (((i >> 1) & 1) << 2) | ((i & 1) << 3));
}

constexpr bool eval_hard(GateOpcode op, bool a, bool b) {
  return (truth_table(op) >> ((a ? 2 : 0) + (b ? 1 : 0))) & 1;
}

/// Bilinear form c0 + c1*a + c2*b + c3*a*b of a gate's relaxation.
struct GateCoefficients {
  double c0 = 0;
  double c1 = 0;
  double c2 = 0;
  double c3 = 0;

  constexpr double eval(double a, double b) const {
    return c0 + c1 * a + c2 * b + c3 * a * b;
  }
};

constexpr GateCoefficients gate_coefficients(GateOpcode op) {
  const std::uint8_t t = truth_table(op);
  const double t00 = t & 1;
  const double t01 = (t >> 1) & 1;
  const double t10 = (t >> 2) & 1;
  const double t11 = (t >> 3) & 1;
  return {t00, t10 - t00, t01 - t00, t00 - t01 - t10 + t11};
}

/// Real-valued relaxation on [0,1]^2. Equals eval_hard at the corners.
double eval_soft(GateOpcode op, double a, double b);

/// Exact partial derivatives (d/da, d/db) of eval_soft.
std::pair<double, double> grad_soft(GateOpcode op, double a, double b);

/// Returns op' with op'(a, b) == op(!a, b) (or op(a, !b) for Operand::kB).
GateOpcode negate_input_opcode(GateOpcode op, Operand which);

/// Canonical upper-case name, e.g. "AND", "NOT_A_OR_B".
std::string_view opcode_name(GateOpcode op);
std::optional<GateOpcode> opcode_from_name(std::string_view name);

/// Connective joining a block's input (A) with its transformed output (B).
enum class SkipConnective : std::uint8_t {
  kAnd = 0,
  kOr = 1,
  kXnor = 2,
  kNotB = 3,
  kImplication = 4,
  kLearned = 5,
};

/// Opcode of a fixed connective; nullopt for kLearned.
std::optional<GateOpcode> connective_opcode(SkipConnective c);
std::string_view connective_name(SkipConnective c);
std::optional<SkipConnective> connective_from_name(std::string_view name);

}  // namespace dbn
