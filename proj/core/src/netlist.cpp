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

#include "dbn/netlist.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <string>

#include "dbn/error.hpp"

namespace dbn {

void GateNetlist::validate() const {
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& n = nodes[k];
    if (opcode_index(n.op) >= kGateCount) throw FormatError("invalid opcode at node " + std::to_string(k));
    if (n.a >= node_ref(k) || n.b >= node_ref(k)) {
      throw FormatError("node " + std::to_string(k) + " references a later signal");
    }
  }
  if (class_outputs.empty()) throw FormatError("netlist has no class groups");
  for (std::size_t c = 0; c < class_outputs.size(); ++c) {
    if (class_outputs[c].empty()) throw FormatError("class group " + std::to_string(c) + " is empty");
    for (Ref r : class_outputs[c]) {
      if (r >= signal_count()) throw FormatError("class group " + std::to_string(c) + " has a dangling ref");
    }
  }
}

GateNetlist harden(const NetworkModel& model) {
  model.validate();
  GateNetlist net;
  net.input_count = static_cast<std::uint32_t>(model.input_width());
  net.temperature = model.head.temperature;
  net.nodes.reserve(model.gate_count());
  std::vector<Ref> cur(model.input_width());
  for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = net.input_ref(i);

  auto emit_layer = [&](const BooleanLayer& l, const std::vector<Ref>& in) {
    std::vector<Ref> out(l.out_width);
    for (std::size_t o = 0; o < l.out_width; ++o) {
      out[o] = net.node_ref(net.nodes.size());
      net.nodes.push_back({l.hard_opcode(o), in[l.pairs.first[o]], in[l.pairs.second[o]]});
    }
    return out;
  };

  for (const auto& st : model.stages) {
    if (const auto* l = std::get_if<BooleanLayer>(&st)) {
      cur = emit_layer(*l, cur);
    } else {
      const auto& b = std::get<SkipBlock>(st);
      const auto u = emit_layer(b.layer_b, emit_layer(b.layer_a, cur));
      std::vector<Ref> out(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) {
        out[i] = net.node_ref(net.nodes.size());
        net.nodes.push_back({b.connective_opcode_at(i), cur[i], u[i]});
      }
      cur = std::move(out);
    }
  }
  const std::size_t per = model.head.per_class(cur.size());
  net.class_outputs.resize(model.head.class_count);
  for (std::size_t c = 0; c < model.head.class_count; ++c) {
    net.class_outputs[c].assign(cur.begin() + static_cast<std::ptrdiff_t>(c * per),
                                cur.begin() + static_cast<std::ptrdiff_t>((c + 1) * per));
  }
  return net;
}

std::vector<std::uint8_t> eval_signals(const GateNetlist& netlist, std::span<const std::uint8_t> inputs) {
  if (inputs.size() != netlist.input_count) throw ShapeError("input width does not match the netlist");
  std::vector<std::uint8_t> v(netlist.signal_count());
  v[GateNetlist::kConst0] = 0;
  v[GateNetlist::kConst1] = 1;
  for (std::size_t i = 0; i < inputs.size(); ++i) v[2 + i] = inputs[i] != 0;
  std::size_t k = 2 + inputs.size();
  for (const auto& n : netlist.nodes) v[k++] = eval_hard(n.op, v[n.a] != 0, v[n.b] != 0);
  return v;
}

std::vector<std::uint32_t> class_counts(const GateNetlist& netlist, std::span<const std::uint8_t> inputs) {
  const auto v = eval_signals(netlist, inputs);
  std::vector<std::uint32_t> counts(netlist.class_count(), 0);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (Ref r : netlist.class_outputs[c]) counts[c] += v[r];
  }
  return counts;
}

std::uint32_t predict_scalar(const GateNetlist& netlist, std::span<const std::uint8_t> inputs) {
  const auto counts = class_counts(netlist, inputs);
  std::uint32_t best = 0;
  for (std::uint32_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return best;
}

BitSliceBatch BitSliceBatch::pack(std::span<const BinarizedImage* const> examples) {
  if (examples.empty() || examples.size() > kLaneWidth) {
    throw SizeError("a bit-slice batch holds 1.." + std::to_string(kLaneWidth) + " examples");
  }
  BitSliceBatch b;
  b.lanes = examples.size();
  const std::size_t d = examples[0]->bits.size();
  b.words.assign(d, 0);
  for (std::size_t lane = 0; lane < examples.size(); ++lane) {
    const auto& bits = examples[lane]->bits;
    if (bits.size() != d) throw ShapeError("examples in a bit-slice batch differ in width");
    for (std::size_t i = 0; i < d; ++i) b.words[i] |= Word{bits[i] != 0} << lane;
  }
  return b;
}

BitSliceBatch BitSliceBatch::pack_bits(std::span<const std::vector<std::uint8_t>> examples) {
  if (examples.empty() || examples.size() > kLaneWidth) {
    throw SizeError("a bit-slice batch holds 1.." + std::to_string(kLaneWidth) + " examples");
  }
  BitSliceBatch b;
  b.lanes = examples.size();
  const std::size_t d = examples[0].size();
  b.words.assign(d, 0);
  for (std::size_t lane = 0; lane < examples.size(); ++lane) {
    if (examples[lane].size() != d) throw ShapeError("examples in a bit-slice batch differ in width");
    for (std::size_t i = 0; i < d; ++i) b.words[i] |= Word{examples[lane][i] != 0} << lane;
  }
  return b;
}

BitSliceEvaluator::BitSliceEvaluator(const GateNetlist& netlist)
    : netlist_(netlist), signals_(netlist.signal_count(), 0) {}

void BitSliceEvaluator::run(const BitSliceBatch& batch) {
  if (batch.words.size() != netlist_.input_count) throw ShapeError("batch width does not match the netlist");
  Word* v = signals_.data();
  v[0] = 0;
  v[1] = ~Word{0};
  std::copy(batch.words.begin(), batch.words.end(), v + 2);
  Word* out = v + 2 + netlist_.input_count;
  for (const auto& n : netlist_.nodes) {
    const Word a = v[n.a], b = v[n.b];
    Word r = 0;
    switch (n.op) {
      case GateOpcode::kFalse: r = 0; break;
      case GateOpcode::kAnd: r = a & b; break;
      case GateOpcode::kAAndNotB: r = a & ~b; break;
      case GateOpcode::kA: r = a; break;
      case GateOpcode::kNotAAndB: r = ~a & b; break;
      case GateOpcode::kB: r = b; break;
      case GateOpcode::kXor: r = a ^ b; break;
      case GateOpcode::kOr: r = a | b; break;
      case GateOpcode::kNor: r = ~(a | b); break;
      case GateOpcode::kXnor: r = ~(a ^ b); break;
      case GateOpcode::kNotB: r = ~b; break;
      case GateOpcode::kAOrNotB: r = a | ~b; break;
      case GateOpcode::kNotA: r = ~a; break;
      case GateOpcode::kImplication: r = ~a | b; break;
      case GateOpcode::kNand: r = ~(a & b); break;
      case GateOpcode::kTrue: r = ~Word{0}; break;
    }
    *out++ = r;
  }
}

std::vector<std::vector<std::uint32_t>> BitSliceEvaluator::class_counts(const BitSliceBatch& batch) {
  run(batch);
  const std::size_t classes = netlist_.class_count();
  std::vector<std::vector<std::uint32_t>> counts(batch.lanes, std::vector<std::uint32_t>(classes, 0));
  std::vector<Word> planes;
  for (std::size_t c = 0; c < classes; ++c) {
    const auto& group = netlist_.class_outputs[c];
    // Vertical (bit-sliced) counter: plane i holds bit i of every lane's count.
    planes.assign(static_cast<std::size_t>(std::bit_width(group.size())), 0);
    for (Ref r : group) {
      Word carry = signals_[r];
      for (std::size_t i = 0; carry != 0 && i < planes.size(); ++i) {
        const Word t = planes[i] & carry;
        planes[i] ^= carry;
        carry = t;
      }
    }
    for (std::size_t lane = 0; lane < batch.lanes; ++lane) {
      std::uint32_t s = 0;
      for (std::size_t i = 0; i < planes.size(); ++i) s |= static_cast<std::uint32_t>((planes[i] >> lane) & 1) << i;
      counts[lane][c] = s;
    }
  }
  return counts;
}

std::vector<std::uint32_t> BitSliceEvaluator::predict(const BitSliceBatch& batch) {
  const auto counts = class_counts(batch);
  std::vector<std::uint32_t> labels(batch.lanes, 0);
  for (std::size_t lane = 0; lane < batch.lanes; ++lane) {
    const auto& c = counts[lane];
    std::uint32_t best = 0;
    for (std::uint32_t k = 1; k < c.size(); ++k) {
      if (c[k] > c[best]) best = k;
    }
    labels[lane] = best;
  }
  return labels;
}

std::vector<std::uint32_t> eval_bitsliced(const GateNetlist& netlist, const BitSliceBatch& batch) {
  BitSliceEvaluator eval(netlist);
  return eval.predict(batch);
}

namespace {

// Word-level operations needed for one gate (andn/orn counted as two).
constexpr std::array<std::size_t, kGateCount> kOpCost = {0, 1, 2, 0, 2, 0, 1, 1,
                                                         2, 2, 1, 2, 1, 2, 2, 0};

}  // namespace

NetlistStats netlist_stats(const GateNetlist& netlist) {
  NetlistStats s;
  s.input_count = netlist.input_count;
  s.node_count = netlist.nodes.size();
  s.class_count = netlist.class_count();
  std::vector<std::uint32_t> depth(netlist.signal_count(), 0);
  for (std::size_t k = 0; k < netlist.nodes.size(); ++k) {
    const auto& n = netlist.nodes[k];
    depth[netlist.node_ref(k)] = 1 + std::max(depth[n.a], depth[n.b]);
    ++s.opcode_histogram[opcode_index(n.op)];
    s.bit_ops_per_inference += kOpCost[opcode_index(n.op)];
  }
  for (const auto& group : netlist.class_outputs) {
    s.output_refs += group.size();
    for (Ref r : group) s.depth = std::max<std::size_t>(s.depth, depth[r]);
  }
  s.bit_ops_per_inference += s.output_refs;
  return s;
}

std::string format_stats(const NetlistStats& s) {
  std::string out;
  char buf[128];
  auto line = [&](const char* key, std::size_t v) {
    std::snprintf(buf, sizeof(buf), "%s=%zu\n", key, v);
    out += buf;
  };
  line("inputs", s.input_count);
  line("nodes", s.node_count);
  line("classes", s.class_count);
  line("output_refs", s.output_refs);
  line("depth", s.depth);
  line("bit_ops_per_inference", s.bit_ops_per_inference);
  for (int j = 0; j < kGateCount; ++j) {
    if (s.opcode_histogram[j] == 0) continue;
    std::snprintf(buf, sizeof(buf), "op.%s=%zu\n", std::string(opcode_name(opcode_from_index(j))).c_str(),
                  s.opcode_histogram[j]);
    out += buf;
  }
  return out;
}

}  // namespace dbn
