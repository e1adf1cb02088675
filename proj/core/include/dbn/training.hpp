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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbn/data.hpp"
#include "dbn/network.hpp"
#include "dbn/serialize.hpp"

namespace dbn {

enum class OptimizerKind : std::uint8_t { kAdam = 0, kSgd = 1 };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // SGD only
  bool operator==(const OptimizerConfig&) const = default;
};

struct TrainConfig {
  OptimizerConfig optimizer;
  std::size_t batch_size = 100;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  AugmentConfig augment;
  std::size_t eval_every = 1;
  std::size_t threads = 1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0;      // mean over the epoch's training batches
  double soft_acc = 0;  // running soft accuracy over the same batches
  std::optional<double> hard_acc;  // hard accuracy on the training set
  double wall_seconds = 0;
  bool operator==(const EpochMetrics&) const = default;
};

/// Adam moments per trainable logit (same layout as parameter_blocks()).
struct OptimizerState {
  std::uint64_t step = 0;
  std::vector<std::vector<float>> first_moment;
  std::vector<std::vector<float>> second_moment;
  bool operator==(const OptimizerState&) const = default;
};

/// Batch of examples with their binarized inputs resolved.
struct Batch {
  std::vector<BinarizedImage> inputs;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
  static Batch from_dataset(const LabeledDataset& data, const BinarizationConfig& cfg);
};

struct LossResult {
  double loss = 0;
  std::vector<std::vector<double>> scores;  // per example, length C
  std::size_t correct = 0;                  // argmax(scores) == label
};

struct GradientResult {
  double loss = 0;
  std::size_t correct = 0;
  std::vector<std::vector<double>> gradients;  // congruent to parameter_blocks()
};

/// Batched soft forward + cross-entropy on temperature-scaled class scores.
LossResult loss_forward(const NetworkModel& model, const Batch& batch, std::size_t threads = 1);

/// Exact gradient of the mean cross-entropy with respect to every logit.
GradientResult backward(const NetworkModel& model, const Batch& batch, std::size_t threads = 1);

class BatchEngine;

struct TrainState {
  NetworkModel model;
  TrainConfig config;
  OptimizerState optimizer;
  std::size_t epoch = 0;
  Rng shuffle_rng;
  Rng augment_rng;
  std::vector<EpochMetrics> history;

  TrainState(NetworkModel model, TrainConfig config);
  TrainState(TrainState&&) noexcept;
  TrainState& operator=(TrainState&&) noexcept;
  ~TrainState();

  BatchEngine& engine();

 private:
  std::unique_ptr<BatchEngine> engine_;
};

/// One pass of shuffled mini-batches with one optimizer step per batch.
/// On a numeric error the state keeps the last completed batch's update.
void train_epoch(TrainState& state, const LabeledDataset& data);

/// Applies one optimizer step for `grads` (used by train_epoch). Throws
/// NumericError and leaves model and state untouched if any updated logit or
/// moment would be non-finite.
void apply_update(NetworkModel& model, OptimizerState& opt, const OptimizerConfig& cfg,
                  const std::vector<std::vector<double>>& grads);

/// Fraction of examples whose predicted class matches the label.
double evaluate(const NetworkModel& model, const LabeledDataset& data, bool hard,
                std::size_t threads = 1);

/// Model container with an optimizer section ("OPTS").
void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
/// Restores model, optimizer moments and epoch counter.
struct Checkpoint {
  NetworkModel model;
  std::optional<OptimizerState> optimizer;
  std::size_t epoch = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string metrics_csv_header();
std::string metrics_csv_row(const EpochMetrics& m);

}  // namespace dbn
