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


// Inference throughput: bit-sliced against scalar evaluation of one
// hardened image model.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dbn/netlist.hpp"
#include "dbn/network.hpp"

namespace dbn {
namespace {

struct Fixture {
  NetworkModel model;
  GateNetlist netlist;
  std::vector<BinarizedImage> images;

  Fixture() {
    ArchitectureOptions o;
    o.name = "DBN-1";
    o.input_shape = binarized_shape(1, 28, 28, o.binarization);
    o.head_width = 48000;
    o.seed = 7;
    model = build_architecture(o);
    netlist = optimize(harden(model), default_passes());
    std::mt19937_64 rng(8);
    for (std::size_t i = 0; i < kLaneWidth; ++i) {
      RawImage img(1, 28, 28);
      for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng() & 0xFF);
      images.push_back(binarize(img, o.binarization));
    }
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_BitSliced(benchmark::State& state) {
  const auto& f = fixture();
  const auto lanes = static_cast<std::size_t>(state.range(0));
  std::vector<const BinarizedImage*> ptrs;
  for (std::size_t i = 0; i < lanes; ++i) ptrs.push_back(&f.images[i]);
  const auto batch = BitSliceBatch::pack(ptrs);
  BitSliceEvaluator eval(f.netlist);
  for (auto _ : state) benchmark::DoNotOptimize(eval.predict(batch));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * lanes));
  state.counters["gates"] = static_cast<double>(f.netlist.nodes.size());
}
BENCHMARK(BM_BitSliced)->Arg(1)->Arg(8)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_ScalarNetlist(benchmark::State& state) {
  const auto& f = fixture();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_scalar(f.netlist, f.images[i].bits));
    i = (i + 1) % f.images.size();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_ScalarNetlist)->Unit(benchmark::kMicrosecond);

void BM_HardModel(benchmark::State& state) {
  const auto& f = fixture();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict(f.model, f.images[i], true));
    i = (i + 1) % f.images.size();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_HardModel)->Unit(benchmark::kMillisecond);

void BM_Optimize(benchmark::State& state) {
  const auto raw = harden(fixture().model);
  const auto passes = default_passes();
  for (auto _ : state) benchmark::DoNotOptimize(optimize(raw, passes));
  state.counters["raw_gates"] = static_cast<double>(raw.nodes.size());
}
BENCHMARK(BM_Optimize)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dbn
