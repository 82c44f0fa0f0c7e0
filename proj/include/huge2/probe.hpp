/* Copyright 2026 The HUGE2 Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <thread>
#include <vector>

// Execution probes.
//
// Every kernel reports the multiply-adds it executes. Normal builds add the
// trip count of each innermost loop block once (HUGE2_PROBE_MACS). Building
// with -DHUGE2_INSTRUMENT moves the count into the innermost loop, one
// increment per executed multiply-add (HUGE2_PROBE_MAC), and enables the
// output write-count shadow used to check that the decomposed path writes
// each output element exactly once.
//
// Counters are thread-local; they only see the whole computation when the
// kernel runs with threads == 1.

namespace huge2::probe {

struct Counters {
  std::uint64_t macs = 0;
  // When set, scatter_combine increments one slot per output element written.
  std::vector<std::uint32_t>* write_counts = nullptr;
};

inline thread_local Counters counters;

inline void reset() { counters = Counters{}; }

#ifdef HUGE2_INSTRUMENT
inline constexpr bool kInstrumented = true;
#else
inline constexpr bool kInstrumented = false;
#endif

}  // namespace huge2::probe

#ifdef HUGE2_INSTRUMENT
#define HUGE2_PROBE_MAC() (++::huge2::probe::counters.macs)
#define HUGE2_PROBE_MACS(n) ((void)0)
#define HUGE2_PROBE_WRITE(i)                                              \
  do {                                                                    \
    if (auto* wc_ = ::huge2::probe::counters.write_counts) ++(*wc_)[(i)]; \
  } while (0)
#else
#define HUGE2_PROBE_MAC() ((void)0)
#define HUGE2_PROBE_MACS(n) (::huge2::probe::counters.macs += static_cast<std::uint64_t>(n))
#define HUGE2_PROBE_WRITE(i) ((void)0)
#endif

namespace huge2::detail {

/// Runs fn(i) for i in [0, count), split into contiguous chunks over up to
/// `threads` workers. fn must only write state owned by index i.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t used = std::min(workers, count);
  const std::size_t chunk = (count + used - 1) / used;
  std::vector<std::jthread> pool;
  pool.reserve(used);
  for (std::size_t w = 0; w < used; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
}

}  // namespace huge2::detail
