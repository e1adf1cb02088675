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

#include "dbn/training.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "bytes.hpp"
#include "dbn/error.hpp"
#include "dbn/netlist.hpp"
#include "engine.hpp"
#include "parallel.hpp"

namespace dbn {
namespace {

constexpr std::array<char, 4> kOptimizerTag = {'O', 'P', 'T', 'S'};
constexpr std::uint64_t kShuffleStream = 0x53485546464C45ULL;  // "SHUFFLE"
constexpr std::uint64_t kAugmentStream = 0x4155474D454E54ULL;  // "AUGMENT"

// Runs `fn(chunk_pointers, chunk_labels, offset)` over a batch in engine-sized chunks.
template <typename Fn>
void for_each_chunk(const Batch& batch, Fn&& fn) {
  std::vector<const BinarizedImage*> ptrs;
  for (std::size_t off = 0; off < batch.size(); off += BatchEngine::kChunk) {
    const std::size_t end = std::min(batch.size(), off + BatchEngine::kChunk);
    ptrs.clear();
    for (std::size_t i = off; i < end; ++i) ptrs.push_back(&batch.inputs[i]);
    fn(std::span<const BinarizedImage* const>(ptrs),
       std::span<const std::uint32_t>(batch.labels.data() + off, end - off), off);
  }
}

void check_batch(const NetworkModel& model, const Batch& batch) {
  if (batch.size() == 0) throw SizeError("batch is empty");
  if (batch.inputs.size() != batch.labels.size()) throw ShapeError("inputs and labels differ in count");
  for (auto y : batch.labels) {
    if (y >= model.head.class_count) throw SizeError("label out of range");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(optimizer.learning_rate >= 0) || !std::isfinite(optimizer.learning_rate)) {
    throw ConfigError("learning rate must be >= 0");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (optimizer.beta1 < 0 || optimizer.beta1 >= 1 || optimizer.beta2 < 0 || optimizer.beta2 >= 1) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
}

Batch Batch::from_dataset(const LabeledDataset& data, const BinarizationConfig& cfg) {
  Batch b;
  b.inputs.reserve(data.size());
  b.labels.reserve(data.size());
  for (const auto& ex : data.examples) {
    b.inputs.push_back(as_binarized(ex, cfg));
    b.labels.push_back(ex.label);
  }
  return b;
}

LossResult loss_forward(const NetworkModel& model, const Batch& batch, std::size_t threads) {
  check_batch(model, batch);
  BatchEngine engine(model, threads);
  LossResult out;
  double loss_sum = 0;
  for_each_chunk(batch, [&](auto inputs, auto labels, std::size_t) {
    engine.forward(inputs);
    const auto l = engine.loss_and_seed(labels, 0.0);
    loss_sum += l.loss_sum;
    out.correct += l.correct;
    for (std::size_t i = 0; i < inputs.size(); ++i) out.scores.push_back(engine.scores(i));
  });
  out.loss = loss_sum / static_cast<double>(batch.size());
  return out;
}

GradientResult backward(const NetworkModel& model, const Batch& batch, std::size_t threads) {
  check_batch(model, batch);
  BatchEngine engine(model, threads);
  GradientResult out;
  double loss_sum = 0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  engine.zero_parameter_grads();
  for_each_chunk(batch, [&](auto inputs, auto labels, std::size_t) {
    engine.forward(inputs);
    const auto l = engine.loss_and_seed(labels, scale);
    loss_sum += l.loss_sum;
    out.correct += l.correct;
    engine.backward();
  });
  out.loss = loss_sum * scale;
  out.gradients = engine.logit_gradients();
  return out;
}

TrainState::TrainState(NetworkModel m, TrainConfig cfg)
    : model(std::move(m)),
      config(cfg),
      shuffle_rng(cfg.seed ^ kShuffleStream),
      augment_rng(cfg.seed ^ kAugmentStream) {
  model.validate();
  config.validate();
  for (auto block : parameter_blocks(model)) {
    optimizer.first_moment.emplace_back(block.size(), 0.0f);
    optimizer.second_moment.emplace_back(block.size(), 0.0f);
  }
}

TrainState::TrainState(TrainState&&) noexcept = default;
TrainState& TrainState::operator=(TrainState&&) noexcept = default;
TrainState::~TrainState() = default;

BatchEngine& TrainState::engine() {
  if (!engine_) engine_ = std::make_unique<BatchEngine>(model, config.threads);
  return *engine_;
}

void apply_update(NetworkModel& model, OptimizerState& opt, const OptimizerConfig& cfg,
                  const std::vector<std::vector<double>>& grads) {
  auto blocks = parameter_blocks(model);
  if (grads.size() != blocks.size()) throw ShapeError("gradient blocks do not match the model");
  if (opt.first_moment.size() != blocks.size()) {
    opt.first_moment.clear();
    opt.second_moment.clear();
    for (auto b : blocks) {
      opt.first_moment.emplace_back(b.size(), 0.0f);
      opt.second_moment.emplace_back(b.size(), 0.0f);
    }
  }
  const double lr = cfg.learning_rate;
  const double t = static_cast<double>(opt.step + 1);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (grads[i].size() != blocks[i].size()) throw ShapeError("gradient block size mismatch");
    if (cfg.kind == OptimizerKind::kAdam && opt.first_moment[i].size() != blocks[i].size()) {
      throw ShapeError("optimizer state mismatch");
    }
  }
  // New logit and moments of one coordinate, rounded to storage precision.
  auto updated = [&](std::size_t i, std::size_t k) -> std::array<float, 3> {
    const double w = blocks[i][k];
    const double g = grads[i][k];
    if (cfg.kind == OptimizerKind::kSgd) {
      return {static_cast<float>(w - lr * (g + cfg.weight_decay * w)), 0.0f, 0.0f};
    }
    const double mk = cfg.beta1 * opt.first_moment[i][k] + (1.0 - cfg.beta1) * g;
    const double vk = cfg.beta2 * opt.second_moment[i][k] + (1.0 - cfg.beta2) * g * g;
    const double step = lr * (mk / bc1) / (std::sqrt(vk / bc2) + cfg.epsilon);
    return {static_cast<float>(w - step), static_cast<float>(mk), static_cast<float>(vk)};
  };
  // Check every coordinate first so a failing step leaves the model intact.
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t k = 0; k < blocks[i].size(); ++k) {
      const auto u = updated(i, k);
      if (!std::isfinite(u[0]) || !std::isfinite(u[1]) || !std::isfinite(u[2])) {
        throw NumericError("non-finite logit after optimizer step", i);
      }
    }
  }
  ++opt.step;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t k = 0; k < blocks[i].size(); ++k) {
      const auto u = updated(i, k);
      blocks[i][k] = u[0];
      if (cfg.kind == OptimizerKind::kAdam) {
        opt.first_moment[i][k] = u[1];
        opt.second_moment[i][k] = u[2];
      }
    }
  }
}

void train_epoch(TrainState& state, const LabeledDataset& data) {
  data.validate();
  if (data.class_count != state.model.head.class_count) {
    throw ConfigError("dataset class count does not match the model");
  }
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = state.config;
  BatchEngine& engine = state.engine();
  engine.refresh(state.model);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_indices(order, state.shuffle_rng);

  double loss_sum = 0;
  std::size_t correct = 0;
  Batch batch;
  for (std::size_t off = 0; off < order.size(); off += cfg.batch_size) {
    const std::size_t end = std::min(order.size(), off + cfg.batch_size);
    batch.inputs.clear();
    batch.labels.clear();
    for (std::size_t i = off; i < end; ++i) {
      const Example& ex = data.examples[order[i]];
      if (const auto* raw = std::get_if<RawImage>(&ex.input)) {
        batch.inputs.push_back(cfg.augment.any()
                                   ? binarize(augment(*raw, state.augment_rng, cfg.augment),
                                              state.model.binarization)
                                   : binarize(*raw, state.model.binarization));
      } else {
        batch.inputs.push_back(std::get<BinarizedImage>(ex.input));
      }
      batch.labels.push_back(ex.label);
    }
    const double scale = 1.0 / static_cast<double>(batch.size());
    double batch_loss = 0;
    std::size_t batch_correct = 0;
    engine.zero_parameter_grads();
    for_each_chunk(batch, [&](auto inputs, auto labels, std::size_t) {
      engine.forward(inputs);
      const auto l = engine.loss_and_seed(labels, scale);
      batch_loss += l.loss_sum;
      batch_correct += l.correct;
      engine.backward();
    });
    const auto grads = engine.logit_gradients();
    // Reject the step before touching the model so the state stays at the
    // last completed batch.
    if (!std::isfinite(batch_loss)) throw NumericError("non-finite training loss", grads.size());
    for (std::size_t b = 0; b < grads.size(); ++b) {
      for (double g : grads[b]) {
        if (!std::isfinite(g)) throw NumericError("non-finite logit gradient", b);
      }
    }
    apply_update(state.model, state.optimizer, cfg.optimizer, grads);
    engine.refresh(state.model);
    loss_sum += batch_loss;
    correct += batch_correct;
  }

  EpochMetrics m;
  m.epoch = state.epoch + 1;
  m.loss = loss_sum / static_cast<double>(data.size());
  m.soft_acc = static_cast<double>(correct) / static_cast<double>(data.size());
  if (m.epoch % cfg.eval_every == 0 || m.epoch == cfg.epochs) {
    m.hard_acc = evaluate(state.model, data, true, cfg.threads);
  }
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  state.epoch = m.epoch;
  state.history.push_back(m);
}

double evaluate(const NetworkModel& model, const LabeledDataset& data, bool hard, std::size_t threads) {
  data.validate();
  if (hard) {
    const GateNetlist net = harden(model);
    const std::size_t batches = (data.size() + kLaneWidth - 1) / kLaneWidth;
    std::vector<std::size_t> correct(batches, 0);
    detail::parallel_for(batches, threads, 4, [&](std::size_t lo, std::size_t hi) {
      BitSliceEvaluator eval(net);
      std::vector<BinarizedImage> imgs;
      std::vector<const BinarizedImage*> ptrs;
      for (std::size_t bi = lo; bi < hi; ++bi) {
        const std::size_t off = bi * kLaneWidth;
        const std::size_t end = std::min(data.size(), off + kLaneWidth);
        imgs.clear();
        ptrs.clear();
        for (std::size_t i = off; i < end; ++i) imgs.push_back(as_binarized(data.examples[i], model.binarization));
        for (const auto& im : imgs) ptrs.push_back(&im);
        const auto labels = eval.predict(BitSliceBatch::pack(ptrs));
        for (std::size_t i = off; i < end; ++i) correct[bi] += labels[i - off] == data.examples[i].label;
      }
    });
    return static_cast<double>(std::accumulate(correct.begin(), correct.end(), std::size_t{0})) /
           static_cast<double>(data.size());
  }
  BatchEngine engine(model, threads);
  std::size_t correct = 0;
  std::vector<BinarizedImage> imgs;
  std::vector<const BinarizedImage*> ptrs;
  for (std::size_t off = 0; off < data.size(); off += BatchEngine::kChunk) {
    const std::size_t end = std::min(data.size(), off + BatchEngine::kChunk);
    imgs.clear();
    ptrs.clear();
    for (std::size_t i = off; i < end; ++i) imgs.push_back(as_binarized(data.examples[i], model.binarization));
    for (const auto& im : imgs) ptrs.push_back(&im);
    engine.forward(ptrs);
    for (std::size_t i = off; i < end; ++i) {
      correct += argmax_class(engine.scores(i - off)) == data.examples[i].label;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
  detail::ByteWriter w;
  w.u64(state.optimizer.step);
  w.u64(state.epoch);
  w.u8(static_cast<std::uint8_t>(state.config.optimizer.kind));
  w.u32(static_cast<std::uint32_t>(state.optimizer.first_moment.size()));
  for (std::size_t i = 0; i < state.optimizer.first_moment.size(); ++i) {
    const auto& m = state.optimizer.first_moment[i];
    const auto& v = state.optimizer.second_moment[i];
    w.u64(m.size());
    w.raw(m.data(), m.size() * sizeof(float));
    w.raw(v.data(), v.size() * sizeof(float));
  }
  const Section opt{kOptimizerTag, w.take()};
  save_model(path, state.model, std::span<const Section>(&opt, 1));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::vector<Section> sections;
  Checkpoint cp;
  cp.model = load_model(path, &sections);
  for (const auto& s : sections) {
    if (s.tag != kOptimizerTag) continue;
    detail::ByteReader r(s.payload);
    OptimizerState opt;
    opt.step = r.u64();
    cp.epoch = r.u64();
    r.u8();
    const std::uint32_t blocks = r.u32();
    for (std::uint32_t i = 0; i < blocks; ++i) {
      const std::uint64_t n = r.u64();
      if (n > r.remaining() / (2 * sizeof(float))) throw TruncationError("optimizer section truncated");
      std::vector<float> m(n), v(n);
      r.raw(m.data(), n * sizeof(float));
      r.raw(v.data(), n * sizeof(float));
      opt.first_moment.push_back(std::move(m));
      opt.second_moment.push_back(std::move(v));
    }
    cp.optimizer = std::move(opt);
  }
  return cp;
}

std::string metrics_csv_header() { return "epoch,loss,soft_acc,hard_acc,wall_seconds"; }

std::string metrics_csv_row(const EpochMetrics& m) {
  char buf[256];
  if (m.hard_acc) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.6f,%.6f,%.3f", m.epoch, m.loss, m.soft_acc,
                  *m.hard_acc, m.wall_seconds);
  } else {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.6f,,%.3f", m.epoch, m.loss, m.soft_acc, m.wall_seconds);
  }
  return buf;
}

}  // namespace dbn
