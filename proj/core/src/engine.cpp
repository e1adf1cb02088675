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

#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dbn/error.hpp"
#include "parallel.hpp"

namespace dbn {
namespace {

constexpr std::size_t kGrain = 256;

std::vector<std::uint32_t> iota_u32(std::size_t n) {
  std::vector<std::uint32_t> v(n);
  std::iota(v.begin(), v.end(), 0u);
  return v;
}

void build_inverse(const std::vector<std::uint32_t>& idx, std::size_t src_width,
                   std::vector<std::uint32_t>& off, std::vector<std::uint32_t>& out) {
  off.assign(src_width + 1, 0);
  for (auto m : idx) ++off[m + 1];
  for (std::size_t m = 0; m < src_width; ++m) off[m + 1] += off[m];
  out.resize(idx.size());
  std::vector<std::uint32_t> cursor(off.begin(), off.end() - 1);
  for (std::size_t o = 0; o < idx.size(); ++o) out[cursor[idx[o]]++] = static_cast<std::uint32_t>(o);
}

}  // namespace

BatchEngine::BatchEngine(const NetworkModel& model, std::size_t threads)
    : threads_(std::max<std::size_t>(threads, 1)),
      class_count_(model.head.class_count),
      temperature_(model.head.temperature) {
  model.validate();
  widths_.push_back(model.input_width());
  std::size_t cur = 0;
  std::size_t layer = 0;
  int param = 0;
  for (const auto& st : model.stages) {
    if (const auto* l = std::get_if<BooleanLayer>(&st)) {
      add_op(cur, cur, l->out_width, layer++, param++, {}, l->pairs.first, l->pairs.second);
      param_sizes_.push_back(l->logits.size());
      cur = ops_.back().dst;
    } else {
      const auto& b = std::get<SkipBlock>(st);
      const std::size_t in = cur;
      add_op(in, in, b.layer_a.out_width, layer++, param++, {}, b.layer_a.pairs.first,
             b.layer_a.pairs.second);
      param_sizes_.push_back(b.layer_a.logits.size());
      const std::size_t mid = ops_.back().dst;
      add_op(mid, mid, b.layer_b.out_width, layer++, param++, {}, b.layer_b.pairs.first,
             b.layer_b.pairs.second);
      param_sizes_.push_back(b.layer_b.logits.size());
      const std::size_t u = ops_.back().dst;
      const bool learned = b.connective == SkipConnective::kLearned;
      GateCoefficients fixed;
      if (!learned) fixed = gate_coefficients(*connective_opcode(b.connective));
      add_op(in, u, b.width(), layer++, learned ? param++ : -1, fixed, iota_u32(b.width()),
             iota_u32(b.width()));
      if (learned) param_sizes_.push_back(b.learned_logits.size());
      cur = ops_.back().dst;
    }
  }
  act_.resize(widths_.size());
  grad_.resize(widths_.size());
  std::size_t max_width = 0;
  for (std::size_t i = 0; i < widths_.size(); ++i) {
    act_[i].assign(widths_[i] * kChunk, 0.0);
    if (i > 0) grad_[i].assign(widths_[i] * kChunk, 0.0);
    max_width = std::max(max_width, widths_[i]);
  }
  scratch_a_.assign(max_width * kChunk, 0.0);
  scratch_b_.assign(max_width * kChunk, 0.0);
  refresh(model);
}

void BatchEngine::add_op(std::size_t src_a, std::size_t src_b, std::size_t width,
                         std::size_t layer, int param, GateCoefficients fixed,
                         std::vector<std::uint32_t> ia, std::vector<std::uint32_t> ib) {
  Op op;
  op.src_a = src_a;
  op.src_b = src_b;
  op.dst = widths_.size();
  op.width = width;
  op.layer = layer;
  op.param = param;
  op.fixed = fixed;
  op.ia = std::move(ia);
  op.ib = std::move(ib);
  op.coef.assign(width * 4, 0.0);
  if (param >= 0) {
    op.probs.assign(width * kGateCount, 0.0);
    op.coef_grad.assign(width * 4, 0.0);
  }
  if (src_a != 0) build_inverse(op.ia, widths_[src_a], op.inv_a_off, op.inv_a_idx);
  if (src_b != 0) build_inverse(op.ib, widths_[src_b], op.inv_b_off, op.inv_b_idx);
  widths_.push_back(width);
  ops_.push_back(std::move(op));
}

void BatchEngine::refresh(const NetworkModel& model) {
  const auto blocks = parameter_blocks(model);
  static const auto table = [] {
    std::array<GateCoefficients, kGateCount> t{};
    for (int j = 0; j < kGateCount; ++j) t[j] = gate_coefficients(opcode_from_index(j));
    return t;
  }();
  for (auto& op : ops_) {
    if (op.param < 0) {
      for (std::size_t o = 0; o < op.width; ++o) {
        op.coef[4 * o + 0] = op.fixed.c0;
        op.coef[4 * o + 1] = op.fixed.c1;
        op.coef[4 * o + 2] = op.fixed.c2;
        op.coef[4 * o + 3] = op.fixed.c3;
      }
      continue;
    }
    const auto logits = blocks[static_cast<std::size_t>(op.param)];
    if (logits.size() != op.width * kGateCount) throw ShapeError("model structure changed under engine");
    bool finite = true;
    for (std::size_t o = 0; o < op.width; ++o) {
      const float* row = logits.data() + o * kGateCount;
      double mx = row[0];
      for (int j = 1; j < kGateCount; ++j) mx = std::max<double>(mx, row[j]);
      double* p = op.probs.data() + o * kGateCount;
      double z = 0;
      for (int j = 0; j < kGateCount; ++j) z += (p[j] = std::exp(static_cast<double>(row[j]) - mx));
      double c0 = 0, c1 = 0, c2 = 0, c3 = 0;
      for (int j = 0; j < kGateCount; ++j) {
        p[j] /= z;
        c0 += p[j] * table[j].c0;
        c1 += p[j] * table[j].c1;
        c2 += p[j] * table[j].c2;
        c3 += p[j] * table[j].c3;
      }
      op.coef[4 * o + 0] = c0;
      op.coef[4 * o + 1] = c1;
      op.coef[4 * o + 2] = c2;
      op.coef[4 * o + 3] = c3;
      finite = finite && std::isfinite(c0) && std::isfinite(c1) && std::isfinite(c2) && std::isfinite(c3);
    }
    if (!finite) throw NumericError("non-finite gate mixture", op.layer);
  }
}

void BatchEngine::forward(std::span<const BinarizedImage* const> inputs) {
  n_ = inputs.size();
  if (n_ == 0 || n_ > kChunk) throw SizeError("forward chunk must hold 1..kChunk examples");
  const std::size_t d0 = widths_[0];
  auto& in = act_[0];
  for (std::size_t b = 0; b < n_; ++b) {
    const auto& bits = inputs[b]->bits;
    if (bits.size() != d0) throw ShapeError("input width does not match the model");
    for (std::size_t i = 0; i < d0; ++i) in[i * kChunk + b] = bits[i];
  }
  const std::size_t n = n_;
  for (auto& op : ops_) {
    const double* A = act_[op.src_a].data();
    const double* B = act_[op.src_b].data();
    double* out = act_[op.dst].data();
    detail::parallel_for(op.width, threads_, kGrain, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t o = lo; o < hi; ++o) {
        const double* a = A + op.ia[o] * kChunk;
        const double* b = B + op.ib[o] * kChunk;
        const double* c = op.coef.data() + 4 * o;
        const double c0 = c[0], c1 = c[1], c2 = c[2], c3 = c[3];
        double* z = out + o * kChunk;
        for (std::size_t e = 0; e < n; ++e) z[e] = c0 + c1 * a[e] + c2 * b[e] + c3 * a[e] * b[e];
      }
    });
  }
  // Class scores, accumulated in double in position order.
  const std::size_t last = widths_.size() - 1;
  const std::size_t per = widths_[last] / class_count_;
  scores_.assign(n_, std::vector<double>(class_count_, 0.0));
  const double* x = act_[last].data();
  for (std::size_t c = 0; c < class_count_; ++c) {
    std::vector<double> acc(n_, 0.0);
    for (std::size_t j = c * per; j < (c + 1) * per; ++j) {
      const double* row = x + j * kChunk;
      for (std::size_t e = 0; e < n_; ++e) acc[e] += row[e];
    }
    for (std::size_t e = 0; e < n_; ++e) scores_[e][c] = acc[e] / temperature_;
  }
}

std::vector<double> BatchEngine::scores(std::size_t i) const { return scores_.at(i); }

BatchEngine::ChunkLoss BatchEngine::loss_and_seed(std::span<const std::uint32_t> labels,
                                                  double grad_scale) {
  if (labels.size() != n_) throw ShapeError("label count does not match the forward chunk");
  for (std::size_t i = 1; i < grad_.size(); ++i) std::fill(grad_[i].begin(), grad_[i].end(), 0.0);
  ChunkLoss out;
  const std::size_t last = widths_.size() - 1;
  const std::size_t per = widths_[last] / class_count_;
  double* g = grad_[last].data();
  for (std::size_t e = 0; e < n_; ++e) {
    const auto& s = scores_[e];
    const std::uint32_t y = labels[e];
    if (y >= class_count_) throw SizeError("label out of range");
    const double mx = *std::max_element(s.begin(), s.end());
    double z = 0;
    for (double v : s) z += std::exp(v - mx);
    const double lse = mx + std::log(z);
    out.loss_sum += lse - s[y];
    if (argmax_class(s) == y) ++out.correct;
    for (std::size_t c = 0; c < class_count_; ++c) {
      const double p = std::exp(s[c] - lse);
      const double ds = (p - (c == y ? 1.0 : 0.0)) * grad_scale / temperature_;
      for (std::size_t j = c * per; j < (c + 1) * per; ++j) g[j * kChunk + e] = ds;
    }
  }
  if (!std::isfinite(out.loss_sum)) throw NumericError("non-finite loss", ops_.empty() ? 0 : ops_.back().layer);
  return out;
}

void BatchEngine::backward() {
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) backward_op(*it);
}

void BatchEngine::backward_op(Op& op) {
  const std::size_t n = n_;
  const double* A = act_[op.src_a].data();
  const double* B = act_[op.src_b].data();
  const double* G = grad_[op.dst].data();
  const bool need_a = op.src_a != 0;
  const bool need_b = op.src_b != 0;

  detail::parallel_for(op.width, threads_, kGrain, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t o = lo; o < hi; ++o) {
      const double* a = A + op.ia[o] * kChunk;
      const double* b = B + op.ib[o] * kChunk;
      const double* g = G + o * kChunk;
      if (op.param >= 0) {
        double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
        for (std::size_t e = 0; e < n; ++e) {
          s0 += g[e];
          s1 += g[e] * a[e];
          s2 += g[e] * b[e];
          s3 += g[e] * a[e] * b[e];
        }
        double* cg = op.coef_grad.data() + 4 * o;
        cg[0] += s0;
        cg[1] += s1;
        cg[2] += s2;
        cg[3] += s3;
      }
      const double* c = op.coef.data() + 4 * o;
      if (need_a) {
        double* ga = scratch_a_.data() + o * kChunk;
        for (std::size_t e = 0; e < n; ++e) ga[e] = g[e] * (c[1] + c[3] * b[e]);
      }
      if (need_b) {
        double* gb = scratch_b_.data() + o * kChunk;
        for (std::size_t e = 0; e < n; ++e) gb[e] = g[e] * (c[2] + c[3] * a[e]);
      }
    }
  });

  auto gather = [&](std::size_t src, const std::vector<std::uint32_t>& off,
                    const std::vector<std::uint32_t>& idx, const std::vector<double>& scratch) {
    double* dst = grad_[src].data();
    detail::parallel_for(widths_[src], threads_, kGrain, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t m = lo; m < hi; ++m) {
        double* d = dst + m * kChunk;
        for (std::uint32_t k = off[m]; k < off[m + 1]; ++k) {
          const double* s = scratch.data() + std::size_t{idx[k]} * kChunk;
          for (std::size_t e = 0; e < n; ++e) d[e] += s[e];
        }
      }
    });
  };
  if (need_a) gather(op.src_a, op.inv_a_off, op.inv_a_idx, scratch_a_);
  if (need_b) gather(op.src_b, op.inv_b_off, op.inv_b_idx, scratch_b_);
}

void BatchEngine::zero_parameter_grads() {
  for (auto& op : ops_) std::fill(op.coef_grad.begin(), op.coef_grad.end(), 0.0);
}

std::vector<std::vector<double>> BatchEngine::logit_gradients() const {
  std::vector<std::vector<double>> out(param_sizes_.size());
  for (std::size_t i = 0; i < param_sizes_.size(); ++i) out[i].assign(param_sizes_[i], 0.0);
  std::array<GateCoefficients, kGateCount> table{};
  for (int j = 0; j < kGateCount; ++j) table[j] = gate_coefficients(opcode_from_index(j));
  for (const auto& op : ops_) {
    if (op.param < 0) continue;
    auto& dst = out[static_cast<std::size_t>(op.param)];
    for (std::size_t o = 0; o < op.width; ++o) {
      const double* cg = op.coef_grad.data() + 4 * o;
      const double* p = op.probs.data() + o * kGateCount;
      std::array<double, kGateCount> dp{};
      double dot = 0;
      for (int j = 0; j < kGateCount; ++j) {
        dp[j] = cg[0] * table[j].c0 + cg[1] * table[j].c1 + cg[2] * table[j].c2 + cg[3] * table[j].c3;
        dot += p[j] * dp[j];
      }
      for (int j = 0; j < kGateCount; ++j) dst[o * kGateCount + j] = p[j] * (dp[j] - dot);
    }
  }
  return out;
}

}  // namespace dbn
