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

#include "twoshot/sampling.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <unordered_set>

namespace twoshot {

namespace {

using Clock = std::chrono::steady_clock;

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.uniform_index(i)]);
  }
}

// Chooses which of `batch` (indices into the pool) join the selected set.
// Returns the chosen indices in insertion order.
using Chooser = std::function<std::vector<std::size_t>(
    const std::vector<std::size_t>& batch, std::size_t take)>;

// Shared frame of every sampler. `draw_size` is how many unvisited members
// are drawn per iteration.
class SelectionRun {
 public:
  SelectionRun(const PathSet& pool, std::span<const double> scores,
               const FgpsConfig& cfg)
      : pool_(pool), cfg_(cfg), counts_(pool.encoding_length()) {
    cfg.validate();
    if (scores.size() != pool.size()) {
      throw ValidationError("scores length " + std::to_string(scores.size()) +
                            " does not match pool size " +
                            std::to_string(pool.size()));
    }
    order_ = filter_pool(pool, scores, cfg.bottom_filter_fraction);
    if (order_.size() < cfg.initial_size) {
      throw ValidationError("pool has " + std::to_string(order_.size()) +
                            " members after filtering, fewer than "
                            "initial_size " +
                            std::to_string(cfg.initial_size));
    }
    Rng rng(cfg.rng_seed);
    shuffle(order_, rng);
  }

  const std::vector<Encoding>& selected() const { return selected_; }
  const SymbolCounts& counts() const { return counts_; }
  const PathSet& pool() const { return pool_; }

  void add(std::size_t pool_index) {
    selected_.push_back(pool_[pool_index]);
    indices_.push_back(pool_index);
    counts_.add(pool_[pool_index]);
  }

  SampleResult run(std::size_t draw_size, const Chooser& choose) {
    const auto start = Clock::now();
    auto record = [&](std::size_t it) {
      const double ms =
          std::chrono::duration<double, std::milli>(Clock::now() - start)
              .count();
      trace_.records.push_back({it, selected_.size(), counts_.entropy(), ms});
    };
    std::size_t cursor = 0;
    for (; cursor < cfg_.initial_size; ++cursor) add(order_[cursor]);
    record(0);
    std::size_t iteration = 0;
    while (selected_.size() < cfg_.max_selected && cursor < order_.size()) {
      const std::size_t n = std::min(draw_size, order_.size() - cursor);
      std::vector<std::size_t> batch(order_.begin() + cursor,
                                     order_.begin() + cursor + n);
      cursor += n;
      const std::size_t take =
          std::min({cfg_.retain_per_iter, cfg_.max_selected - selected_.size(),
                    batch.size()});
      for (std::size_t idx : choose(batch, take)) add(idx);
      record(++iteration);
    }
    SampleResult out;
    out.selected = PathSet(selected_);
    out.selected_indices = indices_;
    out.trace = std::move(trace_);
    out.filtered_pool_size = order_.size();
    return out;
  }

 private:
  const PathSet& pool_;
  const FgpsConfig& cfg_;
  std::vector<std::size_t> order_;
  std::vector<Encoding> selected_;
  std::vector<std::size_t> indices_;
  SymbolCounts counts_;
  SamplerTrace trace_;
};

// Top `take` of `batch` by descending key, ties broken by smaller encoding.
template <typename Key>
std::vector<std::size_t> top_by_key(const PathSet& pool,
                                    const std::vector<std::size_t>& batch,
                                    const std::vector<Key>& keys,
                                    std::size_t take) {
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (keys[a] != keys[b]) return keys[a] > keys[b];
                     return pool[batch[a]] < pool[batch[b]];
                   });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(batch[order[i]]);
  return out;
}

}  // namespace

void FgpsConfig::validate() const {
  if (retain_per_iter == 0) {
    throw ValidationError("fgps: retain_per_iter must be positive");
  }
  if (retain_per_iter > candidate_budget) {
    throw ValidationError("fgps: retain_per_iter exceeds candidate_budget");
  }
  if (!(bottom_filter_fraction >= 0.0 && bottom_filter_fraction < 1.0)) {
    throw ValidationError("fgps: bottom_filter_fraction must be in [0, 1)");
  }
  if (max_selected < initial_size) {
    throw ValidationError("fgps: max_selected must be >= initial_size");
  }
}

std::vector<std::size_t> filter_pool(const PathSet& pool,
                                     std::span<const double> scores,
                                     double bottom_filter_fraction) {
  if (scores.size() != pool.size()) {
    throw ValidationError("scores length does not match pool size");
  }
  std::unordered_set<Encoding, EncodingHash> seen;
  std::vector<std::size_t> distinct;
  distinct.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (seen.insert(pool[i]).second) distinct.push_back(i);
  }
  const auto drop = static_cast<std::size_t>(
      std::floor(bottom_filter_fraction * static_cast<double>(distinct.size())));
  if (drop == 0) return distinct;
  std::vector<std::size_t> by_score = distinct;
  std::stable_sort(by_score.begin(), by_score.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (scores[a] != scores[b]) return scores[a] > scores[b];
                     return pool[b] < pool[a];
                   });
  std::vector<char> removed(pool.size(), 0);
  for (std::size_t i = 0; i < drop; ++i) removed[by_score[i]] = 1;
  std::vector<std::size_t> kept;
  kept.reserve(distinct.size() - drop);
  for (std::size_t i : distinct) {
    if (!removed[i]) kept.push_back(i);
  }
  return kept;
}

SampleResult fgps(const PathSet& pool, std::span<const double> scores,
                  const FgpsConfig& cfg) {
  SelectionRun run(pool, scores, cfg);
  return run.run(cfg.candidate_budget,
                 [&](const std::vector<std::size_t>& batch, std::size_t take) {
    if (cfg.metric == DistanceMetric::kHamming) {
      // Per-position counts give the exact integer sum in O(L).
      std::vector<std::uint64_t> sums(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        sums[i] = run.counts().hamming_sum(pool[batch[i]]);
      }
      return top_by_key(pool, batch, sums, take);
    }
    std::vector<double> sums(batch.size(), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (const Encoding& s : run.selected()) {
        sums[i] += euclidean_distance(pool[batch[i]], s);
      }
    }
    return top_by_key(pool, batch, sums, take);
  });
}

SampleResult random_sampler(const PathSet& pool, std::span<const double> scores,
                            const FgpsConfig& cfg) {
  SelectionRun run(pool, scores, cfg);
  // The pool order is already a uniform shuffle.
  return run.run(cfg.retain_per_iter,
                 [](const std::vector<std::size_t>& batch, std::size_t take) {
                   return std::vector<std::size_t>(batch.begin(),
                                                   batch.begin() + take);
                 });
}

SampleResult entropy_greedy_sampler(const PathSet& pool,
                                    std::span<const double> scores,
                                    const FgpsConfig& cfg, EntropyMode mode) {
  SelectionRun run(pool, scores, cfg);
  return run.run(cfg.candidate_budget,
                 [&](const std::vector<std::size_t>& batch, std::size_t take) {
    if (mode == EntropyMode::kLocal) {
      std::vector<double> h(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        h[i] = run.counts().entropy_with(pool[batch[i]]);
      }
      return top_by_key(pool, batch, h, take);
    }
    std::vector<std::size_t> chosen;
    std::vector<char> used(batch.size(), 0);
    SymbolCounts grown = run.counts();
    for (std::size_t t = 0; t < take; ++t) {
      std::size_t best = batch.size();
      double best_h = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (used[i]) continue;
        const double h = grown.entropy_with(pool[batch[i]]);
        if (best == batch.size() || h > best_h ||
            (h == best_h && pool[batch[i]] < pool[batch[best]])) {
          best = i;
          best_h = h;
        }
      }
      used[best] = 1;
      grown.add(pool[batch[best]]);
      chosen.push_back(batch[best]);
    }
    return chosen;
  });
}

double random_subset_entropy(const PathSet& pool, std::size_t k,
                             std::uint64_t seed) {
  if (k == 0 || k > pool.size()) {
    throw ValidationError("random subset size out of range");
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order, rng);
  SymbolCounts counts(pool.encoding_length());
  for (std::size_t i = 0; i < k; ++i) counts.add(pool[order[i]]);
  return counts.entropy();
}

void write_trace_csv(std::ostream& os, const SamplerTrace& trace,
                     bool with_wall_clock) {
  os << "iteration,size,entropy,elapsed_ms\n";
  char buf[64];
  for (const TraceRecord& r : trace.records) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.entropy);
    os << r.iteration << ',' << r.size << ',' << buf << ',';
    if (with_wall_clock) {
      std::snprintf(buf, sizeof(buf), "%.3f", r.elapsed_ms);
      os << buf;
    } else {
      os << 0;
    }
    os << '\n';
  }
}

}  // namespace twoshot
