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

#include "twoshot/search_space.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace twoshot {

namespace {

constexpr const char* kIntraFields[kIntraTokensPerBlock] = {
    "dense_op",  "sparse_op",       "interaction",    "dense_dim",
    "sparse_dim", "dense_to_sparse", "sparse_to_dense"};

const char* branch_name(Branch b) {
  return b == Branch::kDense ? "dense" : "sparse";
}

[[noreturn]] void fail(int block, const std::string& field,
                       const std::string& what) {
  throw ValidationError("block " + std::to_string(block) + ", " + field +
                        ": " + what);
}

template <typename T>
void check_menu(const std::vector<T>& menu, const char* name) {
  if (menu.empty()) {
    throw ValidationError(std::string("schema: menu '") + name +
                          "' must not be empty");
  }
  if (menu.size() > 255) {
    throw ValidationError(std::string("schema: menu '") + name +
                          "' has more than 255 entries");
  }
}

std::vector<int> menu_sizes(const SearchSpaceSchema::Menus& m) {
  return {static_cast<int>(m.dense_ops.size()),
          static_cast<int>(m.sparse_ops.size()),
          static_cast<int>(m.interactions.size()),
          static_cast<int>(m.dense_dims.size()),
          static_cast<int>(m.sparse_dims.size()),
          static_cast<int>(m.merger_toggles.size()),
          static_cast<int>(m.merger_toggles.size())};
}

void check_inputs(const std::vector<int>& inputs, int block, Branch branch) {
  const std::string field = std::string(branch_name(branch)) + "_inputs";
  if (inputs.empty()) fail(block, field, "branch has no inputs");
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const int in = inputs[k];
    if (in < 0) fail(block, field, "negative input index " + std::to_string(in));
    if (in >= block) {
      fail(block, field,
           "forward reference to input " + std::to_string(in));
    }
    if (k > 0 && inputs[k - 1] >= in) {
      fail(block, field, "inputs must be strictly increasing");
    }
  }
}

int intra_value(const BlockChoice& b, int field) {
  switch (field) {
    case 0: return b.dense_op;
    case 1: return b.sparse_op;
    case 2: return b.interaction;
    case 3: return b.dense_dim;
    case 4: return b.sparse_dim;
    case 5: return b.dense_to_sparse;
    default: return b.sparse_to_dense;
  }
}

void set_intra_value(BlockChoice& b, int field, int v) {
  switch (field) {
    case 0: b.dense_op = v; break;
    case 1: b.sparse_op = v; break;
    case 2: b.interaction = v; break;
    case 3: b.dense_dim = v; break;
    case 4: b.sparse_dim = v; break;
    case 5: b.dense_to_sparse = v; break;
    default: b.sparse_to_dense = v; break;
  }
}

std::vector<int> random_inputs(int block, Rng& rng) {
  std::vector<int> inputs;
  while (inputs.empty()) {
    for (int i = 0; i < block; ++i) {
      if (rng.uniform_index(2) == 1) inputs.push_back(i);
    }
  }
  return inputs;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::string Encoding::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(tokens[i]);
  }
  return out;
}

std::size_t EncodingHash::operator()(const Encoding& e) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Token t : e.tokens) {
    h ^= t;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

SearchSpaceSchema::SearchSpaceSchema(Menus menus) : menus_(std::move(menus)) {
  if (menus_.num_blocks < 1) {
    throw ValidationError("schema: num_blocks must be >= 1");
  }
  if (menus_.num_blocks > 64) {
    throw ValidationError("schema: num_blocks must be <= 64");
  }
  check_menu(menus_.dense_ops, "dense_ops");
  check_menu(menus_.sparse_ops, "sparse_ops");
  check_menu(menus_.interactions, "interactions");
  check_menu(menus_.dense_dims, "dense_dims");
  check_menu(menus_.sparse_dims, "sparse_dims");
  check_menu(menus_.merger_toggles, "merger_toggles");

  const int n = menus_.num_blocks;
  for (int j = 1; j <= n; ++j) {
    for (Branch br : {Branch::kDense, Branch::kSparse}) {
      for (int i = 0; i < n; ++i) {
        cardinalities_.push_back(2);
        forced_zero_.push_back(i >= j);
        labels_.push_back("b" + std::to_string(j) + "_" + branch_name(br) +
                          "_in" + std::to_string(i));
      }
    }
  }
  const std::vector<int> sizes = menu_sizes(menus_);
  for (int j = 1; j <= n; ++j) {
    for (int f = 0; f < kIntraTokensPerBlock; ++f) {
      cardinalities_.push_back(sizes[f]);
      forced_zero_.push_back(false);
      labels_.push_back("b" + std::to_string(j) + "_" + kIntraFields[f]);
    }
  }
}

std::size_t SearchSpaceSchema::connectivity_position(int block, Branch branch,
                                                     int input) const {
  const std::size_t n = static_cast<std::size_t>(menus_.num_blocks);
  return (static_cast<std::size_t>(block - 1) * 2 +
          static_cast<std::size_t>(branch)) * n + static_cast<std::size_t>(input);
}

std::size_t SearchSpaceSchema::intra_section_offset() const {
  const std::size_t n = static_cast<std::size_t>(menus_.num_blocks);
  return 2 * n * n;
}

std::size_t SearchSpaceSchema::intra_position(int block) const {
  return intra_section_offset() +
         static_cast<std::size_t>(block - 1) * kIntraTokensPerBlock;
}

int SearchSpaceSchema::reachable_cardinality(std::size_t pos) const {
  if (forced_zero_[pos]) return 1;
  const std::size_t n = static_cast<std::size_t>(menus_.num_blocks);
  // Block 1 can only read the raw input, so that bit is always set.
  if (pos < intra_section_offset() && pos / n < 2) return 1;
  return cardinalities_[pos];
}

std::uint64_t SearchSpaceSchema::fingerprint() const {
  std::ostringstream os;
  os << "blocks=" << menus_.num_blocks << ';';
  auto put = [&os](const char* name, const auto& menu) {
    os << name << '=';
    for (const auto& v : menu) os << v << '|';
    os << ';';
  };
  put("dense_ops", menus_.dense_ops);
  put("sparse_ops", menus_.sparse_ops);
  put("interactions", menus_.interactions);
  put("dense_dims", menus_.dense_dims);
  put("sparse_dims", menus_.sparse_dims);
  put("merger_toggles", menus_.merger_toggles);
  return fnv1a64(os.str());
}

void validate_path(const Path& path, const SearchSpaceSchema& schema) {
  const int n = schema.num_blocks();
  if (static_cast<int>(path.blocks.size()) != n) {
    throw ValidationError("path has " + std::to_string(path.blocks.size()) +
                          " blocks, schema expects " + std::to_string(n));
  }
  const std::vector<int> sizes = menu_sizes(schema.menus());
  for (int j = 1; j <= n; ++j) {
    const BlockChoice& b = path.blocks[j - 1];
    check_inputs(b.dense_inputs, j, Branch::kDense);
    check_inputs(b.sparse_inputs, j, Branch::kSparse);
    for (int f = 0; f < kIntraTokensPerBlock; ++f) {
      const int v = intra_value(b, f);
      if (v < 0 || v >= sizes[f]) {
        fail(j, kIntraFields[f],
             "choice " + std::to_string(v) + " outside menu of size " +
                 std::to_string(sizes[f]));
      }
    }
  }
}

void validate_encoding(const Encoding& encoding,
                       const SearchSpaceSchema& schema) {
  const std::size_t len = schema.encoding_length();
  if (encoding.size() != len) {
    throw ValidationError("encoding length " + std::to_string(encoding.size()) +
                          " does not match schema length " +
                          std::to_string(len));
  }
  const auto& card = schema.cardinalities();
  for (std::size_t p = 0; p < len; ++p) {
    if (encoding[p] >= card[p]) {
      throw ValidationError("token " + std::to_string(encoding[p]) +
                            " out of range at position " + std::to_string(p) +
                            " (" + schema.position_labels()[p] + ")");
    }
    if (schema.is_forced_zero(p) && encoding[p] != 0) {
      throw ValidationError("position " + schema.position_labels()[p] +
                            " is a forward reference and must be 0");
    }
  }
  const int n = schema.num_blocks();
  for (int j = 1; j <= n; ++j) {
    for (Branch br : {Branch::kDense, Branch::kSparse}) {
      const std::size_t start = schema.connectivity_position(j, br, 0);
      bool any = false;
      for (int i = 0; i < j; ++i) any = any || encoding[start + i] != 0;
      if (!any) {
        fail(j, std::string(branch_name(br)) + "_inputs",
             "all-zero connectivity row");
      }
    }
  }
}

Encoding encode(const Path& path, const SearchSpaceSchema& schema) {
  validate_path(path, schema);
  Encoding e;
  e.tokens.assign(schema.encoding_length(), 0);
  const int n = schema.num_blocks();
  for (int j = 1; j <= n; ++j) {
    const BlockChoice& b = path.blocks[j - 1];
    for (int in : b.dense_inputs) {
      e.tokens[schema.connectivity_position(j, Branch::kDense, in)] = 1;
    }
    for (int in : b.sparse_inputs) {
      e.tokens[schema.connectivity_position(j, Branch::kSparse, in)] = 1;
    }
    const std::size_t base = schema.intra_position(j);
    for (int f = 0; f < kIntraTokensPerBlock; ++f) {
      e.tokens[base + f] = static_cast<Token>(intra_value(b, f));
    }
  }
  return e;
}

Path decode(const Encoding& encoding, const SearchSpaceSchema& schema) {
  validate_encoding(encoding, schema);
  const int n = schema.num_blocks();
  Path path;
  path.blocks.resize(n);
  for (int j = 1; j <= n; ++j) {
    BlockChoice& b = path.blocks[j - 1];
    for (int i = 0; i < j; ++i) {
      if (encoding[schema.connectivity_position(j, Branch::kDense, i)]) {
        b.dense_inputs.push_back(i);
      }
      if (encoding[schema.connectivity_position(j, Branch::kSparse, i)]) {
        b.sparse_inputs.push_back(i);
      }
    }
    const std::size_t base = schema.intra_position(j);
    for (int f = 0; f < kIntraTokensPerBlock; ++f) {
      set_intra_value(b, f, encoding[base + f]);
    }
  }
  return path;
}

Path random_path(const SearchSpaceSchema& schema, Rng& rng) {
  const int n = schema.num_blocks();
  const std::vector<int> sizes = menu_sizes(schema.menus());
  Path path;
  path.blocks.resize(n);
  for (int j = 1; j <= n; ++j) {
    BlockChoice& b = path.blocks[j - 1];
    b.dense_inputs = random_inputs(j, rng);
    b.sparse_inputs = random_inputs(j, rng);
    for (int f = 0; f < kIntraTokensPerBlock; ++f) {
      set_intra_value(b, f, static_cast<int>(rng.uniform_index(sizes[f])));
    }
  }
  return path;
}

Path random_path(const SearchSpaceSchema& schema, std::uint64_t seed) {
  Rng rng(seed);
  return random_path(schema, rng);
}

long double space_size(const SearchSpaceSchema& schema) {
  long double total = 1.0L;
  const std::vector<int> sizes = menu_sizes(schema.menus());
  for (int j = 1; j <= schema.num_blocks(); ++j) {
    const long double rows = std::pow(2.0L, j) - 1.0L;
    total *= rows * rows;
    for (int s : sizes) total *= s;
  }
  return total;
}

std::optional<std::uint64_t> exact_space_size(const SearchSpaceSchema& schema) {
  const std::vector<int> sizes = menu_sizes(schema.menus());
  unsigned __int128 total = 1;
  const unsigned __int128 limit = ~std::uint64_t{0};
  auto mul = [&](unsigned __int128 f) {
    total *= f;
    return total <= limit;
  };
  for (int j = 1; j <= schema.num_blocks(); ++j) {
    if (j >= 63) return std::nullopt;
    const std::uint64_t rows = (std::uint64_t{1} << j) - 1;
    if (!mul(rows) || !mul(rows)) return std::nullopt;
    for (int s : sizes) {
      if (!mul(static_cast<unsigned __int128>(s))) return std::nullopt;
    }
  }
  return static_cast<std::uint64_t>(total);
}

std::vector<Path> enumerate_paths(const SearchSpaceSchema& schema,
                                  std::uint64_t cap) {
  const auto exact = exact_space_size(schema);
  if (!exact || *exact > cap) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4Lg", space_size(schema));
    throw ValidationError(std::string("search space has ") + buf +
                          " paths, above the enumeration cap of " +
                          std::to_string(cap));
  }
  const std::size_t len = schema.encoding_length();
  // Per-position reachable symbols, ascending, so the odometer walks
  // encodings in lexicographic order.
  std::vector<std::vector<Token>> symbols(len);
  for (std::size_t p = 0; p < len; ++p) {
    if (schema.is_forced_zero(p)) {
      symbols[p] = {0};
    } else if (schema.reachable_cardinality(p) == 1 &&
               p < schema.intra_section_offset()) {
      symbols[p] = {1};
    } else {
      for (int s = 0; s < schema.cardinalities()[p]; ++s) {
        symbols[p].push_back(static_cast<Token>(s));
      }
    }
  }
  std::vector<std::size_t> digit(len, 0);
  Encoding e;
  e.tokens.resize(len);
  for (std::size_t p = 0; p < len; ++p) e.tokens[p] = symbols[p][0];

  const int n = schema.num_blocks();
  auto rows_nonempty = [&]() {
    for (int j = 2; j <= n; ++j) {
      for (Branch br : {Branch::kDense, Branch::kSparse}) {
        const std::size_t start = schema.connectivity_position(j, br, 0);
        bool any = false;
        for (int i = 0; i < j && !any; ++i) any = e.tokens[start + i] != 0;
        if (!any) return false;
      }
    }
    return true;
  };

  std::vector<Path> out;
  out.reserve(static_cast<std::size_t>(*exact));
  while (true) {
    if (rows_nonempty()) out.push_back(decode(e, schema));
    std::size_t p = len;
    while (p > 0) {
      --p;
      if (++digit[p] < symbols[p].size()) {
        e.tokens[p] = symbols[p][digit[p]];
        break;
      }
      digit[p] = 0;
      e.tokens[p] = symbols[p][0];
      if (p == 0) return out;
    }
    if (len == 0) return out;
  }
}

}  // namespace twoshot
