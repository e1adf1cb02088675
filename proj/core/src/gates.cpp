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

#include "dbn/gates.hpp"

namespace dbn {
namespace {

constexpr std::array<std::string_view, kGateCount> kNames = {
    "FALSE", "AND",  "A_AND_NOT_B", "A",     "NOT_A_AND_B", "B",          "XOR",  "OR",
    "NOR",   "XNOR", "NOT_B",       "A_OR_NOT_B", "NOT_A",  "NOT_A_OR_B", "NAND", "TRUE",
};

}  // namespace

double eval_soft(GateOpcode op, double a, double b) {
  switch (op) {
    case GateOpcode::kFalse: return 0.0;
    case GateOpcode::kAnd: return a * b;
    case GateOpcode::kAAndNotB: return a - a * b;
    case GateOpcode::kA: return a;
    case GateOpcode::kNotAAndB: return b - a * b;
    case GateOpcode::kB: return b;
    case GateOpcode::kXor: return a + b - 2.0 * a * b;
    case GateOpcode::kOr: return a + b - a * b;
    case GateOpcode::kNor: return 1.0 - (a + b - a * b);
    case GateOpcode::kXnor: return 1.0 - (a + b - 2.0 * a * b);
    case GateOpcode::kNotB: return 1.0 - b;
    case GateOpcode::kAOrNotB: return 1.0 - b + a * b;
    case GateOpcode::kNotA: return 1.0 - a;
    case GateOpcode::kImplication: return 1.0 - a + a * b;
    case GateOpcode::kNand: return 1.0 - a * b;
    case GateOpcode::kTrue: return 1.0;
  }
  return 0.0;
}

std::pair<double, double> grad_soft(GateOpcode op, double a, double b) {
  switch (op) {
    case GateOpcode::kFalse: return {0.0, 0.0};
    case GateOpcode::kAnd: return {b, a};
    case GateOpcode::kAAndNotB: return {1.0 - b, -a};
    case GateOpcode::kA: return {1.0, 0.0};
    case GateOpcode::kNotAAndB: return {-b, 1.0 - a};
    case GateOpcode::kB: return {0.0, 1.0};
    case GateOpcode::kXor: return {1.0 - 2.0 * b, 1.0 - 2.0 * a};
    case GateOpcode::kOr: return {1.0 - b, 1.0 - a};
    case GateOpcode::kNor: return {b - 1.0, a - 1.0};
    case GateOpcode::kXnor: return {2.0 * b - 1.0, 2.0 * a - 1.0};
    case GateOpcode::kNotB: return {0.0, -1.0};
    case GateOpcode::kAOrNotB: return {b, a - 1.0};
    case GateOpcode::kNotA: return {-1.0, 0.0};
    case GateOpcode::kImplication: return {b - 1.0, a};
    case GateOpcode::kNand: return {-b, -a};
    case GateOpcode::kTrue: return {0.0, 0.0};
  }
  return {0.0, 0.0};
}

GateOpcode negate_input_opcode(GateOpcode op, Operand which) {
  const std::uint8_t t = truth_table(op);
  // Bit (2a + b). Negating A swaps bit pairs {0,1} <-> {2,3}; negating B
  // swaps bits 0 <-> 1 and 2 <-> 3.
  std::uint8_t permuted = 0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const int src = which == Operand::kA ? (2 * (1 - a) + b) : (2 * a + (1 - b));
      permuted |= static_cast<std::uint8_t>(((t >> src) & 1) << (2 * a + b));
    }
  }
  for (int i = 0; i < kGateCount; ++i) {
    if (truth_table(opcode_from_index(i)) == permuted) return opcode_from_index(i);
  }
  return op;  // unreachable: all 16 tables are present
}

std::string_view opcode_name(GateOpcode op) { return kNames[opcode_index(op)]; }

std::optional<GateOpcode> opcode_from_name(std::string_view name) {
  for (int i = 0; i < kGateCount; ++i) {
    if (kNames[i] == name) return opcode_from_index(i);
  }
  if (name == "IMPLICATION") return GateOpcode::kImplication;
  return std::nullopt;
}

std::optional<GateOpcode> connective_opcode(SkipConnective c) {
  switch (c) {
    case SkipConnective::kAnd: return GateOpcode::kAnd;
    case SkipConnective::kOr: return GateOpcode::kOr;
    case SkipConnective::kXnor: return GateOpcode::kXnor;
    case SkipConnective::kNotB: return GateOpcode::kNotB;
    case SkipConnective::kImplication: return GateOpcode::kImplication;
    case SkipConnective::kLearned: return std::nullopt;
  }
  return std::nullopt;
}

std::string_view connective_name(SkipConnective c) {
  switch (c) {
    case SkipConnective::kAnd: return "and";
    case SkipConnective::kOr: return "or";
    case SkipConnective::kXnor: return "xnor";
    case SkipConnective::kNotB: return "not_b";
    case SkipConnective::kImplication: return "implication";
    case SkipConnective::kLearned: return "learned";
  }
  return "?";
}

std::optional<SkipConnective> connective_from_name(std::string_view name) {
  for (auto c : {SkipConnective::kAnd, SkipConnective::kOr, SkipConnective::kXnor,
                 SkipConnective::kNotB, SkipConnective::kImplication, SkipConnective::kLearned}) {
    if (connective_name(c) == name) return c;
  }
  return std::nullopt;
}

}  // namespace dbn
