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

#include <cmath>
#include <set>

#include "test_support.h"
#include "twoshot/search_space.h"

namespace twoshot {
namespace {

using testing::enumerable_schema;
using testing::two_block_schema;

TEST(SchemaTest, DefaultLengthAndCardinalities) {
  const SearchSpaceSchema s;
  EXPECT_EQ(s.encoding_length(), 2u * 7 * 7 + 7u * 7);
  EXPECT_EQ(s.encoding_length(), 147u);
  EXPECT_EQ(s.position_labels().size(), 147u);
  const std::size_t intra = s.intra_position(1);
  EXPECT_EQ(intra, s.intra_section_offset());
  EXPECT_EQ(s.cardinalities()[intra + 0], 3);  // dense op
  EXPECT_EQ(s.cardinalities()[intra + 1], 2);  // sparse op
  EXPECT_EQ(s.cardinalities()[intra + 2], 2);  // interaction
  EXPECT_EQ(s.cardinalities()[intra + 3], 8);  // dense dim
  EXPECT_EQ(s.cardinalities()[intra + 4], 4);  // sparse dim
  for (std::size_t p = 0; p < intra; ++p) EXPECT_EQ(s.cardinalities()[p], 2);
}

TEST(SchemaTest, ForcedZeroBits) {
  const SearchSpaceSchema s;
  for (int j = 1; j <= 7; ++j) {
    for (int i = 0; i < 7; ++i) {
      for (Branch b : {Branch::kDense, Branch::kSparse}) {
        EXPECT_EQ(s.is_forced_zero(s.connectivity_position(j, b, i)), i >= j);
      }
    }
  }
}

TEST(SchemaTest, RejectsBadMenus) {
  SearchSpaceSchema::Menus m;
  m.num_blocks = 0;
  EXPECT_THROW(SearchSpaceSchema{m}, ValidationError);
  m = {};
  m.dense_ops.clear();
  EXPECT_THROW(SearchSpaceSchema{m}, ValidationError);
  m = {};
  m.dense_dims.assign(300, 16);
  EXPECT_THROW(SearchSpaceSchema{m}, ValidationError);
}

TEST(SchemaTest, FingerprintTracksMenus) {
  EXPECT_EQ(SearchSpaceSchema().fingerprint(), SearchSpaceSchema().fingerprint());
  EXPECT_NE(SearchSpaceSchema().fingerprint(), two_block_schema().fingerprint());
}

TEST(EncodingTest, RoundTripRandomPaths) {
  const SearchSpaceSchema s;
  Rng rng(11);
  for (int t = 0; t < 2000; ++t) {
    const Path p = random_path(s, rng);
    validate_path(p, s);
    const Encoding e = encode(p, s);
    validate_encoding(e, s);
    EXPECT_EQ(decode(e, s), p);
  }
}

TEST(EncodingTest, RoundTripRandomEncodings) {
  // Encodings are drawn token by token, keeping only valid ones.
  const SearchSpaceSchema s = two_block_schema();
  Rng rng(5);
  int valid = 0;
  for (int t = 0; t < 20000 && valid < 500; ++t) {
    Encoding e;
    for (int c : s.cardinalities()) {
      e.tokens.push_back(static_cast<Token>(rng.uniform_index(c)));
    }
    try {
      validate_encoding(e, s);
    } catch (const ValidationError&) {
      continue;
    }
    ++valid;
    EXPECT_EQ(encode(decode(e, s), s), e);
  }
  EXPECT_EQ(valid, 500);
}

TEST(EncodingTest, HandBuiltPath) {
  const SearchSpaceSchema s = two_block_schema();
  Path p;
  p.blocks.resize(2);
  p.blocks[0].dense_inputs = {0};
  p.blocks[0].sparse_inputs = {0};
  p.blocks[1].dense_inputs = {0, 1};
  p.blocks[1].sparse_inputs = {1};
  p.blocks[1].dense_op = 2;
  p.blocks[1].dense_dim = 1;
  p.blocks[1].sparse_to_dense = 1;
  const Encoding e = encode(p, s);
  EXPECT_EQ(e[s.connectivity_position(2, Branch::kDense, 0)], 1);
  EXPECT_EQ(e[s.connectivity_position(2, Branch::kDense, 1)], 1);
  EXPECT_EQ(e[s.connectivity_position(2, Branch::kSparse, 0)], 0);
  EXPECT_EQ(e[s.connectivity_position(2, Branch::kSparse, 1)], 1);
  EXPECT_EQ(e[s.intra_position(2)], 2);
  EXPECT_EQ(e[s.intra_position(2) + 3], 1);
  EXPECT_EQ(e[s.intra_position(2) + 6], 1);
  EXPECT_EQ(e.to_string().size(), 2 * e.size() - 1);
}

TEST(EncodingTest, InvalidInputsRejected) {
  const SearchSpaceSchema s = two_block_schema();
  const Encoding good = encode(random_path(s, 3), s);

  Encoding short_one = good;
  short_one.tokens.pop_back();
  EXPECT_THROW(validate_encoding(short_one, s), ValidationError);

  Encoding forced = good;
  forced.tokens[s.connectivity_position(1, Branch::kDense, 1)] = 1;
  EXPECT_THROW(validate_encoding(forced, s), ValidationError);

  Encoding empty_row = good;
  empty_row.tokens[s.connectivity_position(2, Branch::kSparse, 0)] = 0;
  empty_row.tokens[s.connectivity_position(2, Branch::kSparse, 1)] = 0;
  EXPECT_THROW(validate_encoding(empty_row, s), ValidationError);
  EXPECT_THROW(decode(empty_row, s), ValidationError);

  Encoding range = good;
  range.tokens[s.intra_position(1)] = 3;
  EXPECT_THROW(validate_encoding(range, s), ValidationError);

  Path p = decode(good, s);
  p.blocks[1].dense_inputs = {1, 0};
  EXPECT_THROW(encode(p, s), ValidationError);
  p = decode(good, s);
  p.blocks[0].sparse_inputs = {1};
  EXPECT_THROW(validate_path(p, s), ValidationError);
}

// Uniform non-empty input subsets of j predecessors set each bit with
// probability 2^(j-1) / (2^j - 1).
TEST(RandomPathTest, ConnectivityBitFrequency) {
  const SearchSpaceSchema s;
  Rng rng(2024);
  const int trials = 40000;
  std::vector<int> set(s.encoding_length(), 0);
  for (int t = 0; t < trials; ++t) {
    const Encoding e = encode(random_path(s, rng), s);
    for (std::size_t p = 0; p < e.size(); ++p) set[p] += e[p] != 0;
  }
  for (int j = 1; j <= 7; ++j) {
    const double expected = std::pow(2.0, j - 1) / (std::pow(2.0, j) - 1.0);
    const double sd = std::sqrt(expected * (1 - expected) / trials);
    for (int i = 0; i < j; ++i) {
      const double got =
          static_cast<double>(set[s.connectivity_position(j, Branch::kDense, i)]) /
          trials;
      EXPECT_NEAR(got, expected, 5 * sd + 1e-12) << "block " << j;
    }
  }
}

TEST(RandomPathTest, SeedDeterminism) {
  const SearchSpaceSchema s;
  EXPECT_EQ(random_path(s, 99), random_path(s, 99));
  EXPECT_NE(random_path(s, 99), random_path(s, 100));
}

TEST(SpaceSizeTest, ClosedFormMatchesEnumeration) {
  const SearchSpaceSchema s = enumerable_schema();
  ASSERT_TRUE(exact_space_size(s).has_value());
  EXPECT_EQ(*exact_space_size(s), 3528u);
  EXPECT_DOUBLE_EQ(static_cast<double>(space_size(s)), 3528.0);
  const std::vector<Path> all = enumerate_paths(s);
  ASSERT_EQ(all.size(), 3528u);
  std::set<Encoding> distinct;
  for (const Path& p : all) {
    const Encoding e = encode(p, s);
    validate_encoding(e, s);
    distinct.insert(e);
  }
  EXPECT_EQ(distinct.size(), all.size());
}

TEST(SpaceSizeTest, TwoBlockCount) {
  // Block 1: 1 row choice each, block 2: 3 each; intra 3*2*2*3*2*2*2 = 288.
  const SearchSpaceSchema s = two_block_schema();
  EXPECT_EQ(*exact_space_size(s), 9u * 288u * 288u);
}

TEST(SpaceSizeTest, EnumerationCapEnforced) {
  EXPECT_THROW(enumerate_paths(SearchSpaceSchema()), ValidationError);
  EXPECT_THROW(enumerate_paths(enumerable_schema(), 1000), ValidationError);
  EXPECT_GT(static_cast<double>(space_size(SearchSpaceSchema())), 1e37);
}

TEST(SchemaTest, ReachableCardinality) {
  const SearchSpaceSchema s;
  EXPECT_EQ(s.reachable_cardinality(s.connectivity_position(1, Branch::kDense, 0)), 1);
  EXPECT_EQ(s.reachable_cardinality(s.connectivity_position(1, Branch::kDense, 3)), 1);
  EXPECT_EQ(s.reachable_cardinality(s.connectivity_position(3, Branch::kSparse, 2)), 2);
  EXPECT_EQ(s.reachable_cardinality(s.intra_position(4) + 3), 8);
}

}  // namespace
}  // namespace twoshot
