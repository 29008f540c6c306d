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

// Distances, path-set diversity and rank statistics.
//
// Entropy is measured in nats: sum over positions of -f log f, where f is
// the fraction of members carrying a symbol at that position.

#ifndef TWOSHOT_METRICS_H_
#define TWOSHOT_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "twoshot/search_space.h"

namespace twoshot {

enum class DistanceMetric { kHamming, kEuclidean };

DistanceMetric parse_metric(const std::string& name);
std::string metric_name(DistanceMetric metric);

// Per-position symbol counts of a multiset of encodings.
class SymbolCounts {
 public:
  SymbolCounts() = default;
  explicit SymbolCounts(std::size_t length) : counts_(length) {}

  void add(const Encoding& e);
  std::size_t size() const { return size_; }
  std::size_t length() const { return counts_.size(); }
  std::size_t count(std::size_t pos, Token symbol) const {
    const auto& c = counts_[pos];
    return symbol < c.size() ? c[symbol] : 0;
  }
  const std::vector<std::vector<std::size_t>>& table() const { return counts_; }

  double entropy() const;
  // Entropy of the multiset with `extra` added, without mutating.
  double entropy_with(const Encoding& extra) const;

  // Sum of Hamming distances from `e` to every counted member.
  std::uint64_t hamming_sum(const Encoding& e) const;

 private:
  std::vector<std::vector<std::size_t>> counts_;
  std::size_t size_ = 0;
};

// Ordered collection of equal-length encodings (duplicates allowed) with a
// frequency table built at construction.
class PathSet {
 public:
  PathSet() = default;
  // Throws ValidationError if member lengths differ.
  explicit PathSet(std::vector<Encoding> members);

  const std::vector<Encoding>& members() const { return members_; }
  const Encoding& operator[](std::size_t i) const { return members_[i]; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  std::size_t encoding_length() const { return counts_.length(); }
  const SymbolCounts& counts() const { return counts_; }

  // f_pos(symbol); 0 for an empty set.
  double frequency(std::size_t pos, Token symbol) const;
  // Per position, symbol -> frequency for every symbol present.
  std::vector<std::map<int, double>> frequency_table() const;

  // First occurrence of every distinct encoding, order preserved.
  PathSet deduplicated() const;

 private:
  std::vector<Encoding> members_;
  SymbolCounts counts_;
};

std::size_t hamming_distance(const Encoding& a, const Encoding& b);
double euclidean_distance(const Encoding& a, const Encoding& b);
double distance(const Encoding& a, const Encoding& b, DistanceMetric metric);

// Throws ValidationError for an empty set.
double shannon_entropy(const PathSet& set);

// Sum over positions of log(c_pos): a set uniform at every position.
double max_entropy(const SearchSpaceSchema& schema);

// Sum of distances over unordered pairs. Requires at least two members.
double pairwise_distance_sum(const PathSet& set, DistanceMetric metric);

struct TheoremReport {
  std::size_t pool_size = 0;
  std::size_t subset_size = 0;
  std::uint64_t subsets_enumerated = 0;
  // First subset (lexicographic index order) with the largest pairwise
  // Hamming sum, and its entropy.
  std::vector<std::size_t> distance_subset;
  double distance_subset_sum = 0.0;
  double distance_subset_entropy = 0.0;
  // First subset with the largest entropy.
  std::vector<std::size_t> entropy_subset;
  double max_subset_entropy = 0.0;
  // distance_subset_entropy / max_subset_entropy, 1 when every subset has
  // zero entropy.
  double ratio = 1.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Exhaustively checks that the max-pairwise-Hamming r-subset of `pool`
// reaches at least (1 - tolerance) of the best achievable r-subset entropy.
TheoremReport theorem_check(const PathSet& pool, std::size_t r,
                            double tolerance,
                            std::uint64_t cap = kDefaultEnumerationCap);

// Tie-corrected Kendall tau-b. Throws ValidationError on length mismatch,
// fewer than two samples, or when either side is entirely tied.
double kendall_tau(std::span<const double> x, std::span<const double> y);

// Product-moment correlation. Throws ValidationError on length mismatch,
// fewer than two samples or zero variance.
double pearson_r(std::span<const double> x, std::span<const double> y);

}  // namespace twoshot

#endif  // TWOSHOT_METRICS_H_
