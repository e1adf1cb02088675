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


// Training cost: one soft forward plus backward pass per mini-batch.

#include <benchmark/benchmark.h>

#include <random>

#include "dbn/network.hpp"
#include "dbn/training.hpp"

namespace dbn {
namespace {

Batch random_batch(const NetworkModel& m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    BinarizedImage img;
    img.shape = m.input_shape;
    img.bits.resize(m.input_width());
    for (auto& bit : img.bits) bit = static_cast<std::uint8_t>(rng() & 1);
    b.inputs.push_back(std::move(img));
    b.labels.push_back(static_cast<std::uint32_t>(rng() % m.head.class_count));
  }
  return b;
}

NetworkModel bench_model() {
  ArchitectureOptions o;
  o.name = "DBN-1";
  o.binarization.threshold_count = 7;
  o.input_shape = binarized_shape(1, 28, 28, o.binarization);
  o.seed = 3;
  return build_architecture(o);
}

void BM_Backward(benchmark::State& state) {
  const auto m = bench_model();
  const auto batch = random_batch(m, static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(backward(m, batch));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
  state.counters["gates"] = static_cast<double>(m.gate_count());
}
BENCHMARK(BM_Backward)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_LossForward(benchmark::State& state) {
  const auto m = bench_model();
  const auto batch = random_batch(m, 100, 5);
  for (auto _ : state) benchmark::DoNotOptimize(loss_forward(m, batch));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
}
BENCHMARK(BM_LossForward)->Unit(benchmark::kMillisecond);

void BM_AdamStep(benchmark::State& state) {
  auto m = bench_model();
  std::vector<std::vector<double>> grads;
  for (auto blk : parameter_blocks(m)) grads.emplace_back(blk.size(), 1e-3);
  OptimizerState opt;
  const OptimizerConfig cfg;
  for (auto _ : state) apply_update(m, opt, cfg, grads);
  state.counters["logits"] = static_cast<double>(m.gate_count() * kGateCount);
}
BENCHMARK(BM_AdamStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dbn
