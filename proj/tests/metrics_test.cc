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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "test_support.h"
#include "twoshot/metrics.h"

namespace twoshot {
namespace {

using testing::reference_entropy;
using testing::reference_hamming;

std::vector<Encoding> random_set(const SearchSpaceSchema& s, std::size_t n,
                                 Rng& rng) {
  std::vector<Encoding> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(encode(random_path(s, rng), s));
  return out;
}

TEST(DistanceTest, HammingMatchesRecount) {
  const SearchSpaceSchema s;
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const Encoding a = encode(random_path(s, rng), s);
    const Encoding b = encode(random_path(s, rng), s);
    EXPECT_EQ(hamming_distance(a, b), reference_hamming(a, b));
    EXPECT_EQ(distance(a, b, DistanceMetric::kHamming),
              static_cast<double>(reference_hamming(a, b)));
  }
}

TEST(DistanceTest, HammingIsAMetric) {
  const SearchSpaceSchema s = testing::two_block_schema();
  Rng rng(2);
  for (int t = 0; t < 300; ++t) {
    const Encoding a = encode(random_path(s, rng), s);
    const Encoding b = encode(random_path(s, rng), s);
    const Encoding c = encode(random_path(s, rng), s);
    EXPECT_EQ(hamming_distance(a, a), 0u);
    EXPECT_EQ(hamming_distance(a, b), hamming_distance(b, a));
    EXPECT_EQ(hamming_distance(a, b) == 0, a == b);
    EXPECT_LE(hamming_distance(a, c),
              hamming_distance(a, b) + hamming_distance(b, c));
  }
}

TEST(DistanceTest, EuclideanMatchesRecount) {
  const SearchSpaceSchema s;
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const Encoding a = encode(random_path(s, rng), s);
    const Encoding b = encode(random_path(s, rng), s);
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      sq += d * d;
    }
    EXPECT_NEAR(euclidean_distance(a, b), std::sqrt(sq), 1e-12);
  }
}

TEST(DistanceTest, LengthMismatchThrows) {
  Encoding a{{1, 0}}, b{{1}};
  EXPECT_THROW(hamming_distance(a, b), ValidationError);
  EXPECT_THROW(euclidean_distance(a, b), ValidationError);
}

TEST(DistanceTest, MetricNames) {
  EXPECT_EQ(parse_metric("hamming"), DistanceMetric::kHamming);
  EXPECT_EQ(parse_metric("euclidean"), DistanceMetric::kEuclidean);
  EXPECT_EQ(metric_name(DistanceMetric::kEuclidean), "euclidean");
  EXPECT_THROW(parse_metric("cosine"), ValidationError);
}

TEST(EntropyTest, MatchesRecountOnRandomSets) {
  const SearchSpaceSchema s;
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto set = random_set(s, 50, rng);
    EXPECT_NEAR(shannon_entropy(PathSet(set)), reference_entropy(set), 1e-12);
  }
}

TEST(EntropyTest, BoundsAndSpecialCases) {
  const SearchSpaceSchema s;
  EXPECT_THROW(shannon_entropy(PathSet()), ValidationError);
  Rng rng(5);
  const Encoding e = encode(random_path(s, rng), s);
  EXPECT_EQ(shannon_entropy(PathSet({e, e, e})), 0.0);
  double expected_max = 0.0;
  for (int c : s.cardinalities()) expected_max += std::log(c);
  EXPECT_NEAR(max_entropy(s), expected_max, 1e-12);
  const auto set = random_set(s, 500, rng);
  EXPECT_LE(shannon_entropy(PathSet(set)), max_entropy(s));
}

TEST(EntropyTest, UniformBinarySet) {
  const std::size_t m = 6;
  std::vector<Encoding> all;
  for (std::size_t v = 0; v < (1u << m); ++v) {
    Encoding e;
    for (std::size_t b = 0; b < m; ++b) e.tokens.push_back((v >> b) & 1);
    all.push_back(e);
  }
  EXPECT_NEAR(shannon_entropy(PathSet(all)), m * std::numbers::ln2, 1e-12);
}

TEST(EntropyTest, IncrementalMatchesRebuild) {
  const SearchSpaceSchema s;
  Rng rng(6);
  const auto set = random_set(s, 30, rng);
  SymbolCounts counts(s.encoding_length());
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::vector<Encoding> grown(set.begin(), set.begin() + i + 1);
    EXPECT_NEAR(counts.entropy_with(set[i]), reference_entropy(grown), 1e-12);
    std::uint64_t hsum = 0;
    for (std::size_t j = 0; j < i; ++j) hsum += reference_hamming(set[i], set[j]);
    EXPECT_EQ(counts.hamming_sum(set[i]), hsum);
    counts.add(set[i]);
    EXPECT_NEAR(counts.entropy(), reference_entropy(grown), 1e-12);
  }
}

TEST(PathSetTest, FrequenciesAndDedup) {
  const Encoding a{{0, 1}}, b{{1, 1}};
  const PathSet set({a, b, a, a});
  EXPECT_DOUBLE_EQ(set.frequency(0, 0), 0.75);
  EXPECT_DOUBLE_EQ(set.frequency(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(set.frequency(1, 0), 0.0);
  const auto table = set.frequency_table();
  ASSERT_EQ(table.size(), 2u);
  EXPECT_EQ(table[0].size(), 2u);
  EXPECT_EQ(table[1].size(), 1u);
  const PathSet d = set.deduplicated();
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0], a);
  EXPECT_EQ(d[1], b);
  EXPECT_THROW(PathSet({a, Encoding{{0}}}), ValidationError);
}

TEST(PairwiseTest, MatchesNaiveSum) {
  const SearchSpaceSchema s;
  Rng rng(7);
  const auto set = random_set(s, 20, rng);
  double ham = 0.0, euc = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      ham += static_cast<double>(reference_hamming(set[i], set[j]));
      euc += euclidean_distance(set[i], set[j]);
    }
  }
  EXPECT_DOUBLE_EQ(pairwise_distance_sum(PathSet(set), DistanceMetric::kHamming),
                   ham);
  EXPECT_NEAR(pairwise_distance_sum(PathSet(set), DistanceMetric::kEuclidean),
              euc, 1e-9);
}

// Exhaustive oracle over all r-subsets, written independently of the library.
TEST(TheoremTest, MatchesExhaustiveOracle) {
  const SearchSpaceSchema s = testing::two_block_schema();
  Rng rng(8);
  for (int t = 0; t < 5; ++t) {
    const auto pool = random_set(s, 9, rng);
    const std::size_t r = 3;
    double best_h = -1.0, best_sum = -1.0;
    std::vector<int> mask(pool.size(), 0);
    std::fill(mask.begin(), mask.begin() + r, 1);
    std::sort(mask.begin(), mask.end());
    do {
      std::vector<Encoding> sub;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (mask[i]) sub.push_back(pool[i]);
      }
      double sum = 0.0;
      for (std::size_t i = 0; i < sub.size(); ++i) {
        for (std::size_t j = i + 1; j < sub.size(); ++j) {
          sum += static_cast<double>(reference_hamming(sub[i], sub[j]));
        }
      }
      const double h = reference_entropy(sub);
      best_h = std::max(best_h, h);
      best_sum = std::max(best_sum, sum);
    } while (std::next_permutation(mask.begin(), mask.end()));
    const TheoremReport rep = theorem_check(PathSet(pool), r, 0.05);
    EXPECT_EQ(rep.subsets_enumerated, 84u);
    EXPECT_DOUBLE_EQ(rep.distance_subset_sum, best_sum);
    EXPECT_NEAR(rep.max_subset_entropy, best_h, 1e-12);
    EXPECT_LE(rep.distance_subset_entropy, rep.max_subset_entropy + 1e-12);
    std::vector<Encoding> chosen;
    for (std::size_t i : rep.distance_subset) chosen.push_back(pool[i]);
    EXPECT_NEAR(rep.distance_subset_entropy, reference_entropy(chosen), 1e-12);
  }
}

TEST(TheoremTest, RejectsBadSizes) {
  const PathSet pool({Encoding{{0}}, Encoding{{1}}});
  EXPECT_THROW(theorem_check(pool, 3, 0.05), ValidationError);
  EXPECT_THROW(theorem_check(pool, 0, 0.05), ValidationError);
}

TEST(RankCorrelationTest, MatchesPairCounting) {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x, y;
    for (int i = 0; i < 50; ++i) {
      x.push_back(static_cast<double>(rng.uniform_index(10)));
      y.push_back(x.back() + rng.normal() * 3.0);
    }
    EXPECT_NEAR(kendall_tau(x, y), testing::reference_kendall(x, y), 1e-12);
    EXPECT_NEAR(pearson_r(x, y), testing::reference_pearson(x, y), 1e-12);
  }
}

TEST(RankCorrelationTest, EdgeCases) {
  const std::vector<double> a{1, 2, 3, 4}, rev{4, 3, 2, 1}, flat{1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(kendall_tau(a, a), 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau(a, rev), -1.0);
  EXPECT_NEAR(pearson_r(a, rev), -1.0, 1e-15);
  EXPECT_THROW(kendall_tau(a, flat), ValidationError);
  EXPECT_THROW(pearson_r(flat, a), ValidationError);
  EXPECT_THROW(kendall_tau(std::vector<double>{1}, std::vector<double>{1}),
               ValidationError);
  EXPECT_THROW(pearson_r(a, std::vector<double>{1, 2}), ValidationError);
}

}  // namespace
}  // namespace twoshot
