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

#include "dbn/network.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "dbn/error.hpp"

namespace dbn {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 1));
}

std::size_t plane_neighbour(const InputShape& s, std::size_t idx, std::size_t dr, std::size_t dc) {
  const std::size_t plane = s.height * s.width;
  const std::size_t base = idx - idx % plane;
  const std::size_t r = (idx % plane) / s.width;
  const std::size_t c = idx % s.width;
  return base + ((r + dr) % s.height) * s.width + (c + dc) % s.width;
}

std::vector<double> mixture_coefficients(std::span<const float> row) {
  double mx = row[0];
  for (float v : row) mx = std::max<double>(mx, v);
  std::array<double, kGateCount> p{};
  double z = 0;
  for (int j = 0; j < kGateCount; ++j) z += (p[j] = std::exp(static_cast<double>(row[j]) - mx));
  std::vector<double> c(4, 0.0);
  for (int j = 0; j < kGateCount; ++j) {
    const auto g = gate_coefficients(opcode_from_index(j));
    const double pj = p[j] / z;
    c[0] += pj * g.c0;
    c[1] += pj * g.c1;
    c[2] += pj * g.c2;
    c[3] += pj * g.c3;
  }
  return c;
}

GateOpcode argmax_opcode(std::span<const float> row) {
  int best = 0;
  for (int j = 1; j < kGateCount; ++j) {
    if (row[j] > row[best]) best = j;
  }
  return opcode_from_index(best);
}

void check_row_logits(std::span<const float> logits, std::size_t rows, const char* what) {
  if (logits.size() != rows * kGateCount) {
    throw ShapeError(std::string(what) + ": logits size does not match width x 16");
  }
  for (float v : logits) {
    if (!std::isfinite(v)) throw ConfigError(std::string(what) + ": non-finite logit");
  }
}

std::vector<float> gaussian_logits(std::size_t rows, Rng& rng, double init_std) {
  std::normal_distribution<double> dist(0.0, init_std);
  std::vector<float> out(rows * kGateCount);
  for (auto& v : out) v = static_cast<float>(dist(rng));
  return out;
}

template <typename Visit>
void for_each_layer(const NetworkModel& m, Visit&& visit) {
  for (const auto& st : m.stages) {
    if (const auto* l = std::get_if<BooleanLayer>(&st)) {
      visit(*l);
    } else {
      const auto& b = std::get<SkipBlock>(st);
      visit(b.layer_a);
      visit(b.layer_b);
    }
  }
}

}  // namespace

std::string_view pairing_name(PairingMode mode) {
  switch (mode) {
    case PairingMode::kRowCol: return "row+col";
    case PairingMode::kRowColDiag: return "row+col+diag";
    case PairingMode::kRandom: return "random";
    case PairingMode::kAdjacent: return "adjacent";
  }
  return "?";
}

std::optional<PairingMode> pairing_from_name(std::string_view name) {
  for (auto m : {PairingMode::kRowCol, PairingMode::kRowColDiag, PairingMode::kRandom,
                 PairingMode::kAdjacent}) {
    if (pairing_name(m) == name) return m;
  }
  return std::nullopt;
}

PairIndexTable build_flat_pairs(std::size_t in_width, std::size_t out_width, PairingMode mode,
                                std::uint64_t seed) {
  if (in_width == 0 || out_width == 0) throw ConfigError("pairing needs non-zero widths");
  PairIndexTable t;
  t.first.resize(out_width);
  t.second.resize(out_width);
  switch (mode) {
    case PairingMode::kAdjacent:
      for (std::size_t o = 0; o < out_width; ++o) {
        const std::size_t m = (o * in_width / out_width) % in_width;
        t.first[o] = static_cast<std::uint32_t>(m);
        t.second[o] = static_cast<std::uint32_t>((m + 1) % in_width);
      }
      return t;
    case PairingMode::kRandom: {
      Rng rng(seed);
      // Concatenated permutations so that every input is used when
      // 2 * out_width >= in_width.
      std::vector<std::size_t> seq;
      seq.reserve(2 * out_width + in_width);
      std::vector<std::size_t> perm(in_width);
      while (seq.size() < 2 * out_width) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        shuffle_indices(perm, rng);
        seq.insert(seq.end(), perm.begin(), perm.end());
      }
      for (std::size_t o = 0; o < out_width; ++o) {
        std::size_t a = seq[2 * o], b = seq[2 * o + 1];
        if (a == b && in_width > 1) b = (b + 1 + uniform_index(rng, in_width - 1)) % in_width;
        t.first[o] = static_cast<std::uint32_t>(a);
        t.second[o] = static_cast<std::uint32_t>(b);
      }
      return t;
    }
    case PairingMode::kRowCol:
    case PairingMode::kRowColDiag:
      throw ConfigError("locality pairing needs an image shape");
  }
  return t;
}

PairIndexTable build_locality_pairs(const InputShape& shape, PairingMode mode,
                                    std::size_t out_width, std::uint64_t seed) {
  const std::size_t d = shape.size();
  if (d == 0) throw ConfigError("empty input shape");
  if (mode == PairingMode::kRandom || mode == PairingMode::kAdjacent) {
    return build_flat_pairs(d, out_width == 0 ? 2 * d : out_width, mode, seed);
  }
  const std::size_t per = mode == PairingMode::kRowCol ? 2 : 3;
  if (out_width != 0 && out_width != per * d) {
    throw ConfigError("locality pairing " + std::string(pairing_name(mode)) + " produces " +
                      std::to_string(per * d) + " pairs, requested " + std::to_string(out_width));
  }
  PairIndexTable t;
  t.first.resize(per * d);
  t.second.resize(per * d);
  for (std::size_t p = 0; p < d; ++p) {
    const auto base = static_cast<std::uint32_t>(p);
    t.first[per * p] = base;
    t.second[per * p] = static_cast<std::uint32_t>(plane_neighbour(shape, p, 0, 1));
    t.first[per * p + 1] = base;
    t.second[per * p + 1] = static_cast<std::uint32_t>(plane_neighbour(shape, p, 1, 0));
    if (per == 3) {
      t.first[per * p + 2] = base;
      t.second[per * p + 2] = static_cast<std::uint32_t>(plane_neighbour(shape, p, 1, 1));
    }
  }
  return t;
}

BooleanLayer BooleanLayer::create(std::size_t in_width, PairIndexTable pairs, PairingMode pairing,
                                  Rng& rng, double init_std) {
  BooleanLayer l;
  l.in_width = in_width;
  l.out_width = pairs.size();
  l.pairing = pairing;
  l.pairs = std::move(pairs);
  l.logits = gaussian_logits(l.out_width, rng, init_std);
  return l;
}

GateOpcode BooleanLayer::hard_opcode(std::size_t o) const { return argmax_opcode(row(o)); }

std::array<double, kGateCount> BooleanLayer::probabilities(std::size_t o) const {
  const auto r = row(o);
  double mx = r[0];
  for (float v : r) mx = std::max<double>(mx, v);
  std::array<double, kGateCount> p{};
  double z = 0;
  for (int j = 0; j < kGateCount; ++j) z += (p[j] = std::exp(static_cast<double>(r[j]) - mx));
  for (auto& v : p) v /= z;
  return p;
}

void BooleanLayer::validate() const {
  if (in_width == 0 || out_width == 0) throw ShapeError("layer widths must be non-zero");
  if (pairs.first.size() != out_width || pairs.second.size() != out_width) {
    throw ShapeError("pair table size does not match layer width");
  }
  for (std::size_t o = 0; o < out_width; ++o) {
    if (pairs.first[o] >= in_width || pairs.second[o] >= in_width) {
      throw ShapeError("pair index out of range at node " + std::to_string(o));
    }
  }
  check_row_logits(logits, out_width, "layer");
}

GateOpcode SkipBlock::connective_opcode_at(std::size_t i) const {
  if (connective == SkipConnective::kLearned) {
    return argmax_opcode({learned_logits.data() + i * kGateCount, kGateCount});
  }
  return *connective_opcode(connective);
}

void SkipBlock::validate() const {
  layer_a.validate();
  layer_b.validate();
  if (layer_b.in_width != layer_a.out_width) throw ShapeError("skip block inner width mismatch");
  if (layer_a.in_width != layer_b.out_width) {
    throw ShapeError("skip block input width must equal its output width");
  }
  if (connective == SkipConnective::kLearned) {
    check_row_logits(learned_logits, width(), "learned connective");
  } else if (!learned_logits.empty()) {
    throw ShapeError("fixed connective carries learned logits");
  }
}

std::size_t VotingHead::per_class(std::size_t output_width) const {
  if (class_count == 0 || output_width % class_count != 0) {
    throw ConfigError("output width " + std::to_string(output_width) +
                      " is not divisible by class count " + std::to_string(class_count));
  }
  return output_width / class_count;
}

std::size_t NetworkModel::output_width() const {
  if (stages.empty()) return input_width();
  const auto& last = stages.back();
  if (const auto* l = std::get_if<BooleanLayer>(&last)) return l->out_width;
  return std::get<SkipBlock>(last).width();
}

std::size_t NetworkModel::node_count() const {
  std::size_t n = 0;
  for_each_layer(*this, [&](const BooleanLayer& l) { n += l.out_width; });
  return n;
}

std::size_t NetworkModel::gate_count() const {
  std::size_t n = node_count();
  for (const auto& st : stages) {
    if (const auto* b = std::get_if<SkipBlock>(&st)) n += b->width();
  }
  return n;
}

std::vector<std::size_t> NetworkModel::layer_widths() const {
  std::vector<std::size_t> w;
  for_each_layer(*this, [&](const BooleanLayer& l) { w.push_back(l.out_width); });
  return w;
}

std::size_t NetworkModel::skip_block_count() const {
  std::size_t n = 0;
  for (const auto& st : stages) n += std::holds_alternative<SkipBlock>(st) ? 1 : 0;
  return n;
}

void NetworkModel::validate() const {
  binarization.validate();
  if (input_width() == 0) throw ShapeError("empty input shape");
  if (stages.empty()) throw ConfigError("model has no layers");
  if (!(head.temperature > 0) || !std::isfinite(head.temperature)) {
    throw ConfigError("temperature must be positive");
  }
  std::size_t width = input_width();
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (const auto* l = std::get_if<BooleanLayer>(&stages[i])) {
      l->validate();
      if (l->in_width != width) throw ShapeError("stage " + std::to_string(i) + " input width mismatch");
      width = l->out_width;
    } else {
      const auto& b = std::get<SkipBlock>(stages[i]);
      b.validate();
      if (b.layer_a.in_width != width) {
        throw ShapeError("stage " + std::to_string(i) + " input width mismatch");
      }
      width = b.width();
    }
  }
  head.per_class(width);
}

std::vector<double> layer_forward_soft(const BooleanLayer& layer, std::span<const double> x) {
  if (x.size() != layer.in_width) throw ShapeError("layer input length mismatch");
  std::vector<double> out(layer.out_width);
  for (std::size_t o = 0; o < layer.out_width; ++o) {
    const auto c = mixture_coefficients(layer.row(o));
    const double a = x[layer.pairs.first[o]], b = x[layer.pairs.second[o]];
    out[o] = c[0] + c[1] * a + c[2] * b + c[3] * a * b;
  }
  return out;
}

std::vector<std::uint8_t> layer_forward_hard(const BooleanLayer& layer,
                                             std::span<const std::uint8_t> x) {
  if (x.size() != layer.in_width) throw ShapeError("layer input length mismatch");
  std::vector<std::uint8_t> out(layer.out_width);
  for (std::size_t o = 0; o < layer.out_width; ++o) {
    out[o] = eval_hard(layer.hard_opcode(o), x[layer.pairs.first[o]] != 0,
                       x[layer.pairs.second[o]] != 0);
  }
  return out;
}

std::vector<double> skip_forward_soft(const SkipBlock& block, std::span<const double> x) {
  if (x.size() != block.layer_a.in_width) throw ShapeError("skip block input width mismatch");
  const auto u = layer_forward_soft(block.layer_b, layer_forward_soft(block.layer_a, x));
  std::vector<double> out(u.size());
  if (block.connective == SkipConnective::kLearned) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      const auto c = mixture_coefficients({block.learned_logits.data() + i * kGateCount, kGateCount});
      out[i] = c[0] + c[1] * x[i] + c[2] * u[i] + c[3] * x[i] * u[i];
    }
  } else {
    const GateOpcode op = *connective_opcode(block.connective);
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = eval_soft(op, x[i], u[i]);
  }
  return out;
}

std::vector<std::uint8_t> skip_forward_hard(const SkipBlock& block,
                                            std::span<const std::uint8_t> x) {
  if (x.size() != block.layer_a.in_width) throw ShapeError("skip block input width mismatch");
  const auto u = layer_forward_hard(block.layer_b, layer_forward_hard(block.layer_a, x));
  std::vector<std::uint8_t> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = eval_hard(block.connective_opcode_at(i), x[i] != 0, u[i] != 0);
  }
  return out;
}

namespace {

template <typename T>
std::vector<double> vote(const VotingHead& head, std::span<const T> x) {
  const std::size_t w = head.per_class(x.size());
  std::vector<double> s(head.class_count, 0.0);
  for (std::size_t c = 0; c < head.class_count; ++c) {
    double acc = 0;
    for (std::size_t j = c * w; j < (c + 1) * w; ++j) acc += static_cast<double>(x[j]);
    s[c] = acc / head.temperature;
  }
  return s;
}

}  // namespace

std::vector<double> voting_forward(const VotingHead& head, std::span<const double> x) {
  return vote(head, x);
}

std::vector<double> voting_forward(const VotingHead& head, std::span<const std::uint8_t> x) {
  return vote(head, x);
}

std::vector<std::vector<double>> forward_soft_trace(const NetworkModel& model,
                                                    std::span<const double> x) {
  if (x.size() != model.input_width()) throw ShapeError("input width mismatch");
  std::vector<std::vector<double>> trace{{x.begin(), x.end()}};
  for (const auto& st : model.stages) {
    if (const auto* l = std::get_if<BooleanLayer>(&st)) {
      trace.push_back(layer_forward_soft(*l, trace.back()));
    } else {
      const auto& b = std::get<SkipBlock>(st);
      const std::vector<double> in = trace.back();
      trace.push_back(layer_forward_soft(b.layer_a, in));
      trace.push_back(layer_forward_soft(b.layer_b, trace.back()));
      trace.push_back(skip_forward_soft(b, in));
    }
  }
  return trace;
}

std::vector<std::vector<std::uint8_t>> forward_hard_trace(const NetworkModel& model,
                                                          std::span<const std::uint8_t> x) {
  if (x.size() != model.input_width()) throw ShapeError("input width mismatch");
  std::vector<std::vector<std::uint8_t>> trace{{x.begin(), x.end()}};
  for (const auto& st : model.stages) {
    if (const auto* l = std::get_if<BooleanLayer>(&st)) {
      trace.push_back(layer_forward_hard(*l, trace.back()));
    } else {
      const auto& b = std::get<SkipBlock>(st);
      const std::vector<std::uint8_t> in = trace.back();
      trace.push_back(layer_forward_hard(b.layer_a, in));
      trace.push_back(layer_forward_hard(b.layer_b, trace.back()));
      trace.push_back(skip_forward_hard(b, in));
    }
  }
  return trace;
}

std::vector<double> class_scores(const NetworkModel& model, const BinarizedImage& img, bool hard) {
  if (img.shape != model.input_shape || img.bits.size() != model.input_width()) {
    throw ShapeError("image shape does not match the model input shape");
  }
  if (hard) {
    std::vector<std::uint8_t> x = img.bits;
    for (const auto& st : model.stages) {
      if (const auto* l = std::get_if<BooleanLayer>(&st)) {
        x = layer_forward_hard(*l, x);
      } else {
        x = skip_forward_hard(std::get<SkipBlock>(st), x);
      }
    }
    return voting_forward(model.head, std::span<const std::uint8_t>(x));
  }
  std::vector<double> x(img.bits.begin(), img.bits.end());
  for (const auto& st : model.stages) {
    if (const auto* l = std::get_if<BooleanLayer>(&st)) {
      x = layer_forward_soft(*l, x);
    } else {
      x = skip_forward_soft(std::get<SkipBlock>(st), x);
    }
  }
  return voting_forward(model.head, std::span<const double>(x));
}

std::uint32_t argmax_class(std::span<const double> scores) {
  std::uint32_t best = 0;
  for (std::uint32_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

std::uint32_t predict(const NetworkModel& model, const BinarizedImage& img, bool hard) {
  return argmax_class(class_scores(model, img, hard));
}

std::size_t parse_block_count(std::string_view name) {
  if (name == "DBN") return 0;
  if (name.size() > 4 && name.substr(0, 4) == "DBN-") {
    std::size_t k = 0;
    for (char ch : name.substr(4)) {
      if (ch < '0' || ch > '9') throw ConfigError("invalid architecture name: " + std::string(name));
      k = k * 10 + static_cast<std::size_t>(ch - '0');
      if (k > 1000) throw ConfigError("block count too large: " + std::string(name));
    }
    return k;
  }
  throw ConfigError("invalid architecture name: " + std::string(name));
}

NetworkModel build_architecture(const ArchitectureOptions& opts) {
  const std::size_t k = parse_block_count(opts.name);
  opts.binarization.validate();
  if (opts.class_count < 1) throw ConfigError("class_count must be >= 1");
  if (opts.input_shape.size() == 0) throw ConfigError("empty input shape");

  NetworkModel m;
  m.architecture = opts.name;
  m.input_shape = opts.input_shape;
  m.binarization = opts.binarization;
  m.sampling = opts.sampling;
  m.seed = opts.seed;
  m.head = {opts.class_count, opts.temperature};

  Rng rng(derive_seed(opts.seed, 0));
  std::uint64_t stream = 1;
  const std::size_t d0 = opts.input_shape.size();

  auto sampling_pairs = build_locality_pairs(opts.input_shape, opts.sampling, 0,
                                             derive_seed(opts.seed, stream++));
  const std::size_t width = sampling_pairs.size();
  m.stages.emplace_back(
      BooleanLayer::create(d0, std::move(sampling_pairs), opts.sampling, rng, opts.init_std));

  const std::size_t inner = opts.bottleneck ? 2 * width : width;
  for (std::size_t i = 0; i < k; ++i) {
    auto a = BooleanLayer::create(
        width, build_flat_pairs(width, inner, opts.hidden_pairing, derive_seed(opts.seed, stream++)),
        opts.hidden_pairing, rng, opts.init_std);
    auto b = BooleanLayer::create(
        inner, build_flat_pairs(inner, width, opts.hidden_pairing, derive_seed(opts.seed, stream++)),
        opts.hidden_pairing, rng, opts.init_std);
    if (opts.skip) {
      SkipBlock blk{std::move(a), std::move(b), opts.connective, {}};
      if (opts.connective == SkipConnective::kLearned) {
        blk.learned_logits = gaussian_logits(width, rng, opts.init_std);
      }
      m.stages.emplace_back(std::move(blk));
    } else {
      m.stages.emplace_back(std::move(a));
      m.stages.emplace_back(std::move(b));
    }
  }

  const std::size_t c = opts.class_count;
  const std::size_t head_width = opts.head_width != 0 ? opts.head_width : c * (width - width % c);
  if (head_width == 0 || head_width % c != 0) {
    throw ConfigError("head width " + std::to_string(head_width) + " must be a positive multiple of " +
                      std::to_string(c));
  }
  m.stages.emplace_back(BooleanLayer::create(
      width, build_flat_pairs(width, head_width, opts.head_pairing, derive_seed(opts.seed, stream++)),
      opts.head_pairing, rng, opts.init_std));
  m.validate();
  return m;
}

NetworkModel build_layered(const InputShape& input, std::span<const std::size_t> widths,
                           PairingMode pairing, std::uint32_t class_count, double temperature,
                           std::uint64_t seed, double init_std) {
  if (widths.empty()) throw ConfigError("at least one layer width is required");
  NetworkModel m;
  m.architecture = "custom";
  m.input_shape = input;
  m.binarization.threshold_count = static_cast<std::uint32_t>(input.thresholds);
  m.sampling = pairing;
  m.seed = seed;
  m.head = {class_count, temperature};
  Rng rng(derive_seed(seed, 0));
  std::size_t prev = input.size();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    auto pairs = (i == 0 && (pairing == PairingMode::kRowCol || pairing == PairingMode::kRowColDiag))
                     ? build_locality_pairs(input, pairing, widths[i], derive_seed(seed, i + 1))
                     : build_flat_pairs(prev, widths[i],
                                        pairing == PairingMode::kAdjacent ? PairingMode::kAdjacent
                                                                          : PairingMode::kRandom,
                                        derive_seed(seed, i + 1));
    m.stages.emplace_back(BooleanLayer::create(prev, std::move(pairs), pairing, rng, init_std));
    prev = widths[i];
  }
  m.validate();
  return m;
}

namespace {

void harden_rows(std::span<float> logits, float scale) {
  for (std::size_t r = 0; r < logits.size() / kGateCount; ++r) {
    auto row = logits.subspan(r * kGateCount, kGateCount);
    const int best = opcode_index(argmax_opcode(row));
    for (int j = 0; j < kGateCount; ++j) row[j] = j == best ? scale : 0.0f;
  }
}

}  // namespace

void harden_logits(NetworkModel& model, float scale) {
  for (auto block : parameter_blocks(model)) harden_rows(block, scale);
}

std::vector<std::span<float>> parameter_blocks(NetworkModel& model) {
  std::vector<std::span<float>> out;
  for (auto& st : model.stages) {
    if (auto* l = std::get_if<BooleanLayer>(&st)) {
      out.emplace_back(l->logits);
    } else {
      auto& b = std::get<SkipBlock>(st);
      out.emplace_back(b.layer_a.logits);
      out.emplace_back(b.layer_b.logits);
      if (b.connective == SkipConnective::kLearned) out.emplace_back(b.learned_logits);
    }
  }
  return out;
}

std::vector<std::span<const float>> parameter_blocks(const NetworkModel& model) {
  auto blocks = parameter_blocks(const_cast<NetworkModel&>(model));
  return {blocks.begin(), blocks.end()};
}

}  // namespace dbn
