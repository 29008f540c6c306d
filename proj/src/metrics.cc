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

#include "twoshot/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace twoshot {

namespace {

void require_same_length(const Encoding& a, const Encoding& b) {
  if (a.size() != b.size()) {
    throw ValidationError("encoding lengths differ: " +
                          std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
}

// -sum f log f over one position. `extra` (if >= 0) is counted once more.
double position_entropy(const std::vector<std::size_t>& counts, double k,
                        int extra) {
  double h = 0.0;
  const std::size_t n = std::max<std::size_t>(
      counts.size(), extra >= 0 ? static_cast<std::size_t>(extra) + 1 : 0);
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t c = s < counts.size() ? counts[s] : 0;
    if (extra >= 0 && static_cast<std::size_t>(extra) == s) ++c;
    if (c == 0) continue;
    const double f = static_cast<double>(c) / k;
    h -= f * std::log(f);
  }
  return h;
}

}  // namespace

DistanceMetric parse_metric(const std::string& name) {
  if (name == "hamming") return DistanceMetric::kHamming;
  if (name == "euclidean") return DistanceMetric::kEuclidean;
  throw ValidationError("unknown distance metric '" + name + "'");
}

std::string metric_name(DistanceMetric metric) {
  return metric == DistanceMetric::kHamming ? "hamming" : "euclidean";
}

void SymbolCounts::add(const Encoding& e) {
  if (size_ == 0 && counts_.empty()) counts_.resize(e.size());
  if (e.size() != counts_.size()) {
    throw ValidationError("encoding length " + std::to_string(e.size()) +
                          " does not match set length " +
                          std::to_string(counts_.size()));
  }
  for (std::size_t p = 0; p < e.size(); ++p) {
    auto& c = counts_[p];
    if (e[p] >= c.size()) c.resize(static_cast<std::size_t>(e[p]) + 1, 0);
    ++c[e[p]];
  }
  ++size_;
}

double SymbolCounts::entropy() const {
  if (size_ == 0) return 0.0;
  const double k = static_cast<double>(size_);
  double total = 0.0;
  for (const auto& c : counts_) total += position_entropy(c, k, -1);
  return total;
}

double SymbolCounts::entropy_with(const Encoding& extra) const {
  if (!counts_.empty() && extra.size() != counts_.size()) {
    throw ValidationError("encoding length mismatch in entropy_with");
  }
  const double k = static_cast<double>(size_ + 1);
  double total = 0.0;
  for (std::size_t p = 0; p < extra.size(); ++p) {
    static const std::vector<std::size_t> kEmpty;
    const auto& c = counts_.empty() ? kEmpty : counts_[p];
    total += position_entropy(c, k, extra[p]);
  }
  return total;
}

std::uint64_t SymbolCounts::hamming_sum(const Encoding& e) const {
  std::uint64_t sum = 0;
  for (std::size_t p = 0; p < counts_.size(); ++p) {
    sum += size_ - count(p, e[p]);
  }
  return sum;
}

PathSet::PathSet(std::vector<Encoding> members) : members_(std::move(members)) {
  if (!members_.empty()) counts_ = SymbolCounts(members_.front().size());
  for (const Encoding& e : members_) counts_.add(e);
}

double PathSet::frequency(std::size_t pos, Token symbol) const {
  if (members_.empty()) return 0.0;
  return static_cast<double>(counts_.count(pos, symbol)) /
         static_cast<double>(members_.size());
}

std::vector<std::map<int, double>> PathSet::frequency_table() const {
  std::vector<std::map<int, double>> table(encoding_length());
  const double k = static_cast<double>(members_.size());
  for (std::size_t p = 0; p < table.size(); ++p) {
    const auto& c = counts_.table()[p];
    for (std::size_t s = 0; s < c.size(); ++s) {
      if (c[s]) table[p][static_cast<int>(s)] = static_cast<double>(c[s]) / k;
    }
  }
  return table;
}

PathSet PathSet::deduplicated() const {
  std::unordered_set<Encoding, EncodingHash> seen;
  std::vector<Encoding> out;
  out.reserve(members_.size());
  for (const Encoding& e : members_) {
    if (seen.insert(e).second) out.push_back(e);
  }
  return PathSet(std::move(out));
}

std::size_t hamming_distance(const Encoding& a, const Encoding& b) {
  require_same_length(a, b);
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

double euclidean_distance(const Encoding& a, const Encoding& b) {
  require_same_length(a, b);
  std::int64_t sq = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::int64_t d = static_cast<std::int64_t>(a[i]) - b[i];
    sq += d * d;
  }
  return std::sqrt(static_cast<double>(sq));
}

double distance(const Encoding& a, const Encoding& b, DistanceMetric metric) {
  return metric == DistanceMetric::kHamming
             ? static_cast<double>(hamming_distance(a, b))
             : euclidean_distance(a, b);
}

double shannon_entropy(const PathSet& set) {
  if (set.empty()) throw ValidationError("entropy of an empty path set");
  return set.counts().entropy();
}

double max_entropy(const SearchSpaceSchema& schema) {
  double h = 0.0;
  for (int c : schema.cardinalities()) h += std::log(static_cast<double>(c));
  return h;
}

double pairwise_distance_sum(const PathSet& set, DistanceMetric metric) {
  if (set.size() < 2) {
    throw ValidationError("pairwise distance needs at least two members");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      sum += distance(set[i], set[j], metric);
    }
  }
  return sum;
}

TheoremReport theorem_check(const PathSet& pool, std::size_t r,
                            double tolerance, std::uint64_t cap) {
  const std::size_t n = pool.size();
  if (r == 0 || r > n) {
    throw ValidationError("subset size must be in [1, " + std::to_string(n) +
                          "]");
  }
  // C(n, r) with overflow guard.
  long double combos = 1.0L;
  for (std::size_t i = 0; i < r; ++i) {
    combos = combos * static_cast<long double>(n - i) /
             static_cast<long double>(i + 1);
  }
  if (combos > static_cast<long double>(cap)) {
    throw ValidationError("C(" + std::to_string(n) + ", " + std::to_string(r) +
                          ") exceeds the enumeration cap of " +
                          std::to_string(cap));
  }

  std::vector<std::size_t> dist(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i * n + j] = dist[j * n + i] = hamming_distance(pool[i], pool[j]);
    }
  }

  TheoremReport rep;
  rep.pool_size = n;
  rep.subset_size = r;
  rep.tolerance = tolerance;
  std::uint64_t best_sum = 0;
  bool have_best = false;
  double best_entropy = -1.0;

  std::vector<std::size_t> idx(r);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<Encoding> members(r);
  while (true) {
    std::uint64_t sum = 0;
    for (std::size_t a = 0; a < r; ++a) {
      for (std::size_t b = a + 1; b < r; ++b) sum += dist[idx[a] * n + idx[b]];
    }
    SymbolCounts counts(pool.encoding_length());
    for (std::size_t a = 0; a < r; ++a) counts.add(pool[idx[a]]);
    const double h = counts.entropy();
    ++rep.subsets_enumerated;
    if (!have_best || sum > best_sum) {
      have_best = true;
      best_sum = sum;
      rep.distance_subset = idx;
      rep.distance_subset_entropy = h;
    }
    if (h > best_entropy) {
      best_entropy = h;
      rep.entropy_subset = idx;
    }
    // Next combination in lexicographic order.
    std::size_t k = r;
    while (k > 0 && idx[k - 1] == n - r + (k - 1)) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t m = k; m < r; ++m) idx[m] = idx[m - 1] + 1;
  }
  rep.distance_subset_sum = static_cast<double>(best_sum);
  rep.max_subset_entropy = best_entropy;
  rep.ratio = best_entropy > 0.0 ? rep.distance_subset_entropy / best_entropy
                                 : 1.0;
  rep.pass = rep.ratio >= 1.0 - tolerance;
  return rep;
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("kendall_tau: length mismatch");
  }
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("kendall_tau: need at least two samples");
  std::int64_t concordant = 0, discordant = 0, tied_x = 0, tied_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) {
        ++tied_x;
        ++tied_y;
      } else if (dx == 0.0) {
        ++tied_x;
      } else if (dy == 0.0) {
        ++tied_y;
      } else if ((dx > 0.0) == (dy > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const std::int64_t pairs = static_cast<std::int64_t>(n * (n - 1) / 2);
  const double denom = std::sqrt(static_cast<double>(pairs - tied_x)) *
                       std::sqrt(static_cast<double>(pairs - tied_y));
  if (denom == 0.0) {
    throw ValidationError("kendall_tau: input is entirely tied");
  }
  return static_cast<double>(concordant - discordant) / denom;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson_r: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("pearson_r: need at least two samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw ValidationError("pearson_r: zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace twoshot
