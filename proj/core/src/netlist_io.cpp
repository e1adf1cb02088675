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

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>

#include "bytes.hpp"
#include "dbn/error.hpp"
#include "dbn/netlist.hpp"

namespace dbn {
namespace {

using detail::ByteReader;
using detail::ByteWriter;

std::vector<std::uint8_t> export_compact(const GateNetlist& net) {
  ByteWriter w;
  w.raw(kNetlistMagic.data(), kNetlistMagic.size());
  w.u16(kNetlistVersion);
  w.u32(net.input_count);
  w.u32(static_cast<std::uint32_t>(net.nodes.size()));
  w.u16(static_cast<std::uint16_t>(net.class_outputs.size()));
  // Opcodes two per byte, even node in the low nibble.
  for (std::size_t k = 0; k < net.nodes.size(); k += 2) {
    std::uint8_t byte = static_cast<std::uint8_t>(opcode_index(net.nodes[k].op));
    if (k + 1 < net.nodes.size()) byte |= static_cast<std::uint8_t>(opcode_index(net.nodes[k + 1].op) << 4);
    w.u8(byte);
  }
  for (const auto& n : net.nodes) {
    w.leb128(n.a);
    w.leb128(n.b);
  }
  for (const auto& group : net.class_outputs) {
    w.leb128(group.size());
    for (Ref r : group) w.leb128(r);
  }
  w.f64(net.temperature);
  return w.take();
}

GateNetlist import_compact(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  std::array<char, 4> magic{};
  r.raw(magic.data(), magic.size());
  if (magic != kNetlistMagic) throw FormatError("not a compact netlist (bad magic)");
  const std::uint16_t version = r.u16();
  if (version != kNetlistVersion) throw VersionError("unsupported netlist version " + std::to_string(version));
  GateNetlist net;
  net.input_count = r.u32();
  const std::uint32_t count = r.u32();
  const std::uint16_t classes = r.u16();
  if (r.remaining() < (std::size_t{count} + 1) / 2) throw TruncationError("truncated opcode stream");
  net.nodes.resize(count);
  for (std::size_t k = 0; k < count; k += 2) {
    const std::uint8_t byte = r.u8();
    net.nodes[k].op = opcode_from_index(byte & 0xF);
    if (k + 1 < count) net.nodes[k + 1].op = opcode_from_index(byte >> 4);
  }
  auto ref = [&] {
    const std::uint64_t v = r.leb128();
    if (v > 0xFFFFFFFFull) throw FormatError("reference out of range");
    return static_cast<Ref>(v);
  };
  for (auto& n : net.nodes) {
    n.a = ref();
    n.b = ref();
  }
  net.class_outputs.resize(classes);
  for (auto& group : net.class_outputs) {
    const std::uint64_t n = r.leb128();
    if (n > r.remaining()) throw TruncationError("truncated class group");
    group.resize(n);
    for (auto& x : group) x = ref();
  }
  net.temperature = r.f64();
  if (r.remaining() != 0) throw FormatError("trailing bytes in compact netlist");
  net.validate();
  return net;
}

std::string ref_text(const GateNetlist& net, Ref r) {
  if (r == GateNetlist::kConst0) return "0";
  if (r == GateNetlist::kConst1) return "1";
  if (net.is_input(r)) return "x" + std::to_string(r - 2);
  return "n" + std::to_string(net.node_index(r));
}

std::size_t parse_number(std::string_view s, std::size_t line) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw FormatError("line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

Ref parse_ref(const GateNetlist& net, std::string_view tok, std::size_t line) {
  if (tok == "0") return GateNetlist::kConst0;
  if (tok == "1") return GateNetlist::kConst1;
  if (tok.size() > 1 && tok[0] == 'x') {
    const std::size_t i = parse_number(tok.substr(1), line);
    if (i >= net.input_count) throw FormatError("line " + std::to_string(line) + ": input out of range");
    return net.input_ref(i);
  }
  if (tok.size() > 1 && tok[0] == 'n') return net.node_ref(parse_number(tok.substr(1), line));
  throw FormatError("line " + std::to_string(line) + ": bad reference '" + std::string(tok) + "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string to_text(const GateNetlist& net) {
  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", net.temperature);
  out += "inputs " + std::to_string(net.input_count) + " classes " +
         std::to_string(net.class_outputs.size()) + " temperature " + buf + "\n";
  for (std::size_t k = 0; k < net.nodes.size(); ++k) {
    const auto& n = net.nodes[k];
    out += "n" + std::to_string(k) + " = " + std::string(opcode_name(n.op)) + "(" + ref_text(net, n.a) +
           ", " + ref_text(net, n.b) + ")\n";
  }
  for (std::size_t c = 0; c < net.class_outputs.size(); ++c) {
    out += "class" + std::to_string(c) + " =";
    for (Ref r : net.class_outputs[c]) out += " " + ref_text(net, r);
    out += "\n";
  }
  return out;
}

GateNetlist parse_text_netlist(std::string_view text) {
  GateNetlist net;
  bool header = false;
  std::size_t line_no = 0;
  std::size_t classes = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (!header) {
      std::istringstream in{std::string(line)};
      std::string k1, k2, k3;
      std::size_t d0 = 0;
      double z = 0;
      if (!(in >> k1 >> d0 >> k2 >> classes >> k3 >> z) || k1 != "inputs" || k2 != "classes" ||
          k3 != "temperature") {
        throw FormatError(where + "expected 'inputs <n> classes <c> temperature <z>'");
      }
      net.input_count = static_cast<std::uint32_t>(d0);
      net.temperature = z;
      net.class_outputs.resize(classes);
      header = true;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError(where + "missing '='");
    const std::string_view lhs = trim(line.substr(0, eq));
    std::string_view rhs = trim(line.substr(eq + 1));
    if (lhs.starts_with("class")) {
      const std::size_t c = parse_number(lhs.substr(5), line_no);
      if (c >= classes) throw FormatError(where + "class index out of range");
      while (!rhs.empty()) {
        const std::size_t sp = rhs.find(' ');
        net.class_outputs[c].push_back(parse_ref(net, rhs.substr(0, sp), line_no));
        rhs = sp == std::string_view::npos ? std::string_view{} : trim(rhs.substr(sp + 1));
      }
      continue;
    }
    if (lhs.empty() || lhs[0] != 'n' || parse_number(lhs.substr(1), line_no) != net.nodes.size()) {
      throw FormatError(where + "nodes must be declared in order as n<k>");
    }
    const std::size_t open = rhs.find('('), comma = rhs.find(','), close = rhs.rfind(')');
    if (open == std::string_view::npos || comma == std::string_view::npos || close == std::string_view::npos ||
        !(open < comma && comma < close)) {
      throw FormatError(where + "expected OP(a, b)");
    }
    const auto op = opcode_from_name(trim(rhs.substr(0, open)));
    if (!op) throw FormatError(where + "unknown opcode '" + std::string(rhs.substr(0, open)) + "'");
    GateNode n{*op, parse_ref(net, trim(rhs.substr(open + 1, comma - open - 1)), line_no),
               parse_ref(net, trim(rhs.substr(comma + 1, close - comma - 1)), line_no)};
    net.nodes.push_back(n);
  }
  if (!header) throw FormatError("empty netlist text");
  net.validate();
  return net;
}

std::vector<std::uint8_t> export_netlist(const GateNetlist& netlist, NetlistFormat format) {
  netlist.validate();
  if (format == NetlistFormat::kCompactBinary) return export_compact(netlist);
  const std::string text = to_text(netlist);
  return {text.begin(), text.end()};
}

GateNetlist import_netlist(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && std::equal(kNetlistMagic.begin(), kNetlistMagic.end(), bytes.begin())) {
    return import_compact(bytes);
  }
  return parse_text_netlist({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

}  // namespace dbn
