// Copyright 2026 The TwoShot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Path samplers that grow a selected set out of a scored candidate pool.
//
// All samplers share the same frame: duplicates and the worst-scored
// fraction of the pool are dropped, the selected set is seeded with
// `initial_size` random members, and each iteration draws members that were
// never visited before. Scores are losses, lower is better.

#ifndef TWOSHOT_SAMPLING_H_
#define TWOSHOT_SAMPLING_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "twoshot/metrics.h"

namespace twoshot {

struct FgpsConfig {
  std::size_t initial_size = 200;
  std::size_t candidate_budget = 200;
  std::size_t retain_per_iter = 20;
  std::size_t max_selected = 5500;
  double bottom_filter_fraction = 0.075;
  DistanceMetric metric = DistanceMetric::kHamming;
  std::uint64_t rng_seed = 0;

  // Throws ValidationError if retain_per_iter > candidate_budget, the
  // filter fraction is outside [0, 1) or max_selected < initial_size.
  void validate() const;
};

struct TraceRecord {
  std::size_t iteration = 0;
  std::size_t size = 0;
  double entropy = 0.0;
  double elapsed_ms = 0.0;
};

struct SamplerTrace {
  std::vector<TraceRecord> records;
};

struct SampleResult {
  PathSet selected;
  // Indices into the caller's pool, in selection order.
  std::vector<std::size_t> selected_indices;
  SamplerTrace trace;
  std::size_t filtered_pool_size = 0;
};

// Indices (ascending) of the pool members that survive deduplication and the
// bottom filter. Among duplicates the first occurrence is kept; the
// floor(fraction * n) highest-scored distinct members are removed.
std::vector<std::size_t> filter_pool(const PathSet& pool,
                                     std::span<const double> scores,
                                     double bottom_filter_fraction);

// Farthest greedy path sampling: each iteration draws `candidate_budget`
// unvisited members and keeps the `retain_per_iter` with the largest summed
// distance to the selected set (ties: smaller encoding first).
SampleResult fgps(const PathSet& pool, std::span<const double> scores,
                  const FgpsConfig& cfg);

// Adds `retain_per_iter` uniformly drawn unvisited members per iteration.
SampleResult random_sampler(const PathSet& pool, std::span<const double> scores,
                            const FgpsConfig& cfg);

enum class EntropyMode { kLocal, kGlobal };

// Local: keep the candidates whose individual addition to the selected set
// yields the highest entropy. Global: add candidates one at a time, each
// maximizing the entropy of the grown selected set.
SampleResult entropy_greedy_sampler(const PathSet& pool,
                                    std::span<const double> scores,
                                    const FgpsConfig& cfg, EntropyMode mode);

// Entropy of `k` distinct members drawn uniformly from `pool`.
double random_subset_entropy(const PathSet& pool, std::size_t k,
                             std::uint64_t seed);

// iteration,size,entropy,elapsed_ms. Times are written as 0 unless
// `with_wall_clock` is set, so traces are reproducible byte for byte.
void write_trace_csv(std::ostream& os, const SamplerTrace& trace,
                     bool with_wall_clock);

}  // namespace twoshot

#endif  // TWOSHOT_SAMPLING_H_
