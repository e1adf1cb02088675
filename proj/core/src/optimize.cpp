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

#include <optional>
#include <string>

#include "dbn/netlist.hpp"

namespace dbn {
namespace {

// Rebuilds a netlist node by node; map[old] is the replacement signal.
struct Rewriter {
  const GateNetlist& in;
  GateNetlist out;
  std::vector<Ref> map;

  explicit Rewriter(const GateNetlist& src) : in(src), map(src.signal_count()) {
    out.input_count = src.input_count;
    out.temperature = src.temperature;
    for (Ref r = 0; r < 2 + src.input_count; ++r) map[r] = r;
  }

  Ref emit(GateOpcode op, Ref a, Ref b) {
    out.nodes.push_back({op, a, b});
    return out.node_ref(out.nodes.size() - 1);
  }

  GateNetlist finish() {
    out.class_outputs.resize(in.class_outputs.size());
    for (std::size_t c = 0; c < in.class_outputs.size(); ++c) {
      for (Ref r : in.class_outputs[c]) out.class_outputs[c].push_back(map[r]);
    }
    return std::move(out);
  }
};

// Reduces a gate whose output depends on at most one signal `x`, given its
// values for x = 0 and x = 1.
Ref reduce_unary(Rewriter& rw, bool at0, bool at1, Ref x) {
  if (!at0 && !at1) return GateNetlist::kConst0;
  if (at0 && at1) return GateNetlist::kConst1;
  if (!at0 && at1) return x;
  return rw.emit(GateOpcode::kNotA, x, x);
}

GateNetlist const_fold(const GateNetlist& net) {
  Rewriter rw(net);
  for (std::size_t k = 0; k < net.nodes.size(); ++k) {
    const auto& n = net.nodes[k];
    const Ref a = rw.map[n.a], b = rw.map[n.b];
    const bool ca = net.is_const(a), cb = net.is_const(b);
    Ref r;
    if (n.op == GateOpcode::kFalse) {
      r = GateNetlist::kConst0;
    } else if (n.op == GateOpcode::kTrue) {
      r = GateNetlist::kConst1;
    } else if (ca && cb) {
      r = eval_hard(n.op, a == GateNetlist::kConst1, b == GateNetlist::kConst1) ? GateNetlist::kConst1
                                                                               : GateNetlist::kConst0;
    } else if (ca) {
      const bool va = a == GateNetlist::kConst1;
      r = reduce_unary(rw, eval_hard(n.op, va, false), eval_hard(n.op, va, true), b);
    } else if (cb) {
      const bool vb = b == GateNetlist::kConst1;
      r = reduce_unary(rw, eval_hard(n.op, false, vb), eval_hard(n.op, true, vb), a);
    } else if (a == b) {
      r = reduce_unary(rw, eval_hard(n.op, false, false), eval_hard(n.op, true, true), a);
    } else {
      r = rw.emit(n.op, a, b);
    }
    rw.map[net.node_ref(k)] = r;
  }
  return rw.finish();
}

GateNetlist copy_prop(const GateNetlist& net) {
  Rewriter rw(net);
  for (std::size_t k = 0; k < net.nodes.size(); ++k) {
    const auto& n = net.nodes[k];
    const Ref a = rw.map[n.a], b = rw.map[n.b];
    Ref r;
    if (n.op == GateOpcode::kA) {
      r = a;
    } else if (n.op == GateOpcode::kB) {
      r = b;
    } else {
      r = rw.emit(n.op, a, b);
    }
    rw.map[net.node_ref(k)] = r;
  }
  return rw.finish();
}

GateNetlist negation_fold(const GateNetlist& net) {
  Rewriter rw(net);
  // negated[new ref] = signal that the NOT node inverts.
  std::vector<std::optional<Ref>> negated(net.signal_count());
  for (std::size_t k = 0; k < net.nodes.size(); ++k) {
    const auto& n = net.nodes[k];
    Ref a = rw.map[n.a], b = rw.map[n.b];
    GateOpcode op = n.op;
    const auto na = negated[a];
    const auto nb = negated[b];
    if (na) {
      a = *na;
      op = negate_input_opcode(op, Operand::kA);
    }
    if (nb) {
      b = *nb;
      op = negate_input_opcode(op, Operand::kB);
    }
    const Ref r = rw.emit(op, a, b);
    if (op == GateOpcode::kNotA) negated[r] = a;
    if (op == GateOpcode::kNotB) negated[r] = b;
    rw.map[net.node_ref(k)] = r;
  }
  return rw.finish();
}

GateNetlist dead_elim(const GateNetlist& net) {
  std::vector<char> live(net.signal_count(), 0);
  for (const auto& group : net.class_outputs) {
    for (Ref r : group) live[r] = 1;
  }
  for (std::size_t k = net.nodes.size(); k-- > 0;) {
    if (!live[net.node_ref(k)]) continue;
    live[net.nodes[k].a] = 1;
    live[net.nodes[k].b] = 1;
  }
  Rewriter rw(net);
  for (std::size_t k = 0; k < net.nodes.size(); ++k) {
    if (!live[net.node_ref(k)]) continue;
    const auto& n = net.nodes[k];
    rw.map[net.node_ref(k)] = rw.emit(n.op, rw.map[n.a], rw.map[n.b]);
  }
  return rw.finish();
}

}  // namespace

std::string_view pass_name(Pass p) {
  switch (p) {
    case Pass::kConstFold: return "const_fold";
    case Pass::kCopyProp: return "copy_prop";
    case Pass::kNegationFold: return "negation_fold";
    case Pass::kDeadElim: return "dead_elim";
  }
  return "?";
}

std::optional<Pass> pass_from_name(std::string_view name) {
  for (auto p : {Pass::kConstFold, Pass::kCopyProp, Pass::kNegationFold, Pass::kDeadElim}) {
    if (pass_name(p) == name) return p;
  }
  return std::nullopt;
}

std::vector<Pass> default_passes() {
  return {Pass::kConstFold, Pass::kCopyProp, Pass::kNegationFold, Pass::kDeadElim};
}

GateNetlist run_pass(const GateNetlist& netlist, Pass pass) {
  switch (pass) {
    case Pass::kConstFold: return const_fold(netlist);
    case Pass::kCopyProp: return copy_prop(netlist);
    case Pass::kNegationFold: return negation_fold(netlist);
    case Pass::kDeadElim: return dead_elim(netlist);
  }
  return netlist;
}

GateNetlist optimize(const GateNetlist& netlist, std::span<const Pass> passes) {
  GateNetlist cur = netlist;
  if (passes.empty()) return cur;
  // Each round removes a node or a negated edge, so the fixpoint is reached
  // within a bounded number of rounds.
  const std::size_t max_rounds = 2 * netlist.nodes.size() + 2;
  for (std::size_t round = 0; round < max_rounds; ++round) {
    GateNetlist next = cur;
    for (Pass p : passes) next = run_pass(next, p);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

}  // namespace dbn
