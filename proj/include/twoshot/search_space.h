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

// Block-based recommender search space and the path <-> token encoding.
//
// A search space has `num_blocks` choice blocks. Block j (1-based) has a
// dense and a sparse branch; each branch reads from a non-empty subset of
// {0 = raw input, 1, ..., j-1}. Inside the block one dense operator, one
// sparse operator, an interaction toggle, a dense and a sparse width and
// two merger toggles (dense->sparse, sparse->dense) are chosen.
//
// Encoding layout, length L = N * 2N + N * 7:
//   inter-block section: for j = 1..N, N dense connectivity bits followed by
//     N sparse connectivity bits; bit i is set iff input i feeds the branch,
//     bits i >= j are always 0.
//   intra-block section: for j = 1..N, the menu indices of
//     [dense op, sparse op, interaction, dense dim, sparse dim,
//      dense->sparse merger, sparse->dense merger].

#ifndef TWOSHOT_SEARCH_SPACE_H_
#define TWOSHOT_SEARCH_SPACE_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "twoshot/common.h"

namespace twoshot {

using Token = std::uint8_t;

// Fixed-length categorical token vector. Ordering is lexicographic on tokens
// and is used for every deterministic tie-break in the library.
struct Encoding {
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  Token operator[](std::size_t i) const { return tokens[i]; }
  auto operator<=>(const Encoding&) const = default;
  bool operator==(const Encoding&) const = default;

  // Comma separated tokens, e.g. "1,0,2".
  std::string to_string() const;
};

struct EncodingHash {
  std::size_t operator()(const Encoding& e) const noexcept;
};

enum class Branch { kDense = 0, kSparse = 1 };

// Number of intra-block tokens per block.
inline constexpr int kIntraTokensPerBlock = 7;

struct BlockChoice {
  // Sorted, distinct input indices in [0, j).
  std::vector<int> dense_inputs;
  std::vector<int> sparse_inputs;
  int dense_op = 0;
  int sparse_op = 0;
  int interaction = 0;
  int dense_dim = 0;
  int sparse_dim = 0;
  int dense_to_sparse = 0;
  int sparse_to_dense = 0;

  bool operator==(const BlockChoice&) const = default;
};

struct Path {
  std::vector<BlockChoice> blocks;
  bool operator==(const Path&) const = default;
};

class SearchSpaceSchema {
 public:
  struct Menus {
    int num_blocks = 7;
    std::vector<std::string> dense_ops{"FC", "SG", "Sum"};
    std::vector<std::string> sparse_ops{"EFC", "Att"};
    std::vector<std::string> interactions{"DP-on", "DP-off"};
    std::vector<int> dense_dims{16, 32, 64, 128, 256, 512, 768, 1024};
    std::vector<int> sparse_dims{16, 32, 48, 64};
    std::vector<std::string> merger_toggles{"off", "on"};

    bool operator==(const Menus&) const = default;
  };

  // The default seven-block space.
  SearchSpaceSchema() : SearchSpaceSchema(Menus{}) {}
  // Throws ValidationError when num_blocks < 1, a menu is empty, or a menu
  // has more entries than a Token can index.
  explicit SearchSpaceSchema(Menus menus);

  const Menus& menus() const { return menus_; }
  int num_blocks() const { return menus_.num_blocks; }
  std::size_t encoding_length() const { return cardinalities_.size(); }
  const std::vector<int>& cardinalities() const { return cardinalities_; }
  const std::vector<std::string>& position_labels() const { return labels_; }

  // Offset of connectivity bit `input` of `branch` in 1-based `block`.
  std::size_t connectivity_position(int block, Branch branch, int input) const;
  // Offset of the first intra-block token of 1-based `block`.
  std::size_t intra_position(int block) const;
  std::size_t intra_section_offset() const;

  // True for connectivity bits that can never be set (input index >= block).
  bool is_forced_zero(std::size_t pos) const { return forced_zero_[pos]; }

  // Number of symbols a valid path can actually put at `pos`.
  int reachable_cardinality(std::size_t pos) const;

  // Stable fingerprint of the menus.
  std::uint64_t fingerprint() const;

  bool operator==(const SearchSpaceSchema& other) const {
    return menus_ == other.menus_;
  }

 private:
  Menus menus_;
  std::vector<int> cardinalities_;
  std::vector<std::string> labels_;
  std::vector<bool> forced_zero_;
};

// Throws ValidationError naming the block and field of the first violation.
void validate_path(const Path& path, const SearchSpaceSchema& schema);

// Throws ValidationError on length mismatch, out-of-range tokens, set bits in
// forced-zero positions or an all-zero connectivity row.
void validate_encoding(const Encoding& encoding,
                       const SearchSpaceSchema& schema);

Encoding encode(const Path& path, const SearchSpaceSchema& schema);
Path decode(const Encoding& encoding, const SearchSpaceSchema& schema);

// Uniform choice per position; connectivity rows that come out empty are
// resampled.
Path random_path(const SearchSpaceSchema& schema, Rng& rng);
Path random_path(const SearchSpaceSchema& schema, std::uint64_t seed);

// Number of valid paths as a floating value (the default space is ~1e38).
long double space_size(const SearchSpaceSchema& schema);
// Exact count when it fits in 64 bits.
std::optional<std::uint64_t> exact_space_size(const SearchSpaceSchema& schema);

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

// Every valid path in lexicographic encoding order. Throws ValidationError
// reporting the computed size when it exceeds `cap`.
std::vector<Path> enumerate_paths(const SearchSpaceSchema& schema,
                                  std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace twoshot

#endif  // TWOSHOT_SEARCH_SPACE_H_
