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
#include <span>
#include <vector>

#include "dbn/data.hpp"
#include "dbn/gates.hpp"
#include "dbn/network.hpp"

namespace dbn {

/// Batched soft forward/backward over a model's layer graph.
///
/// Every node's 16-way gate mixture is a bilinear form c0 + c1*a + c2*b +
/// c3*a*b whose coefficients are linear in the softmax probabilities, so the
/// engine evaluates 4 coefficients per node instead of 16 relaxed gates.
/// Activations are stored node-major with the examples of a chunk
/// contiguous. All reductions run in a fixed order, independent of the
/// thread count.
class BatchEngine {
 public:
  static constexpr std::size_t kChunk = 50;

  BatchEngine(const NetworkModel& model, std::size_t threads);

  /// Recomputes mixture coefficients from the model's current logits.
  /// Throws NumericError on non-finite coefficients.
  void refresh(const NetworkModel& model);

  /// Soft forward of up to kChunk examples.
  void forward(std::span<const BinarizedImage* const> inputs);

  /// Class scores of example `i` of the last forward chunk.
  std::vector<double> scores(std::size_t i) const;

  struct ChunkLoss {
    double loss_sum = 0;
    std::size_t correct = 0;
  };

  /// Cross-entropy of the last chunk; seeds the output gradient with
  /// dL/dscore * grad_scale.
  ChunkLoss loss_and_seed(std::span<const std::uint32_t> labels, double grad_scale);

  /// Back-propagates the seeded chunk, accumulating coefficient gradients.
  void backward();

  void zero_parameter_grads();

  /// Logit gradients from the accumulated coefficient gradients, congruent
  /// to parameter_blocks(model).
  std::vector<std::vector<double>> logit_gradients() const;

  std::size_t threads() const { return threads_; }

 private:
  struct Op {
    std::size_t src_a = 0;
    std::size_t src_b = 0;
    std::size_t dst = 0;
    std::size_t width = 0;
    std::size_t layer = 0;
    int param = -1;  // index into parameter_blocks, -1 for a fixed gate
    GateCoefficients fixed;
    std::vector<std::uint32_t> ia, ib;
    std::vector<double> coef;   // width x 4
    std::vector<double> probs;  // width x 16, trainable ops only
    std::vector<double> coef_grad;  // width x 4
    // Consumers of each source signal, for gathering input gradients.
    std::vector<std::uint32_t> inv_a_off, inv_a_idx, inv_b_off, inv_b_idx;
  };

  void add_op(std::size_t src_a, std::size_t src_b, std::size_t width, std::size_t layer,
              int param, GateCoefficients fixed, std::vector<std::uint32_t> ia,
              std::vector<std::uint32_t> ib);
  void backward_op(Op& op);

  std::size_t threads_;
  std::size_t n_ = 0;  // examples in the current chunk
  std::vector<std::size_t> widths_;  // per buffer
  std::vector<std::vector<double>> act_;
  std::vector<std::vector<double>> grad_;
  std::vector<double> scratch_a_, scratch_b_;
  std::vector<Op> ops_;
  std::vector<std::size_t> param_sizes_;
  std::uint32_t class_count_ = 0;
  double temperature_ = 1;
  std::vector<std::vector<double>> scores_;
};

}  // namespace dbn
