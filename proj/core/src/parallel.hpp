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

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace dbn::detail {

/// Splits [0, n) into contiguous ranges, one per thread, with at least
/// `grain` items per range. Work items must be independent, so results never
/// depend on the thread count. `fn` must not throw.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, std::size_t grain, Fn&& fn) {
  const std::size_t by_grain = grain == 0 ? n : n / grain;
  const std::size_t t = std::clamp<std::size_t>(std::min(threads, by_grain), 1, 256);
  if (t <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(t - 1);
  const std::size_t step = (n + t - 1) / t;
  for (std::size_t i = 1; i < t; ++i) {
    const std::size_t begin = std::min(n, i * step);
    const std::size_t end = std::min(n, begin + step);
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(std::size_t{0}, std::min(n, step));
}

}  // namespace dbn::detail
