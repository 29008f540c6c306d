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

// Simulated ground truth and weight-sharing supernet.
//
// Landscape: a seeded loss over encodings, sigmoid(sum of unary utilities of
// the chosen (position, symbol) entries + pairwise interaction terms). It
// stands in for training a subnet from scratch.
//
// SupernetState: a maturity in [0, 1] per (position, symbol) entry. Training
// on a path moves each of its entries toward 1 by a fixed gain, so entries
// that are rarely sampled stay immature. The proxy (supernet) loss of a path
// is its true loss plus a pessimistic bias proportional to the immaturity of
// its entries, shrunk by fine-tuning, plus per-evaluation noise.
//
// Only choice positions (reachable cardinality >= 2) carry entries; fixed
// positions such as forward-reference bits hold no weights.

#ifndef TWOSHOT_SURROGATE_H_
#define TWOSHOT_SURROGATE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "twoshot/search_space.h"

namespace twoshot {

struct LandscapeConfig {
  std::uint64_t rng_seed = 1;
  double unary_weight_scale = 0.02;
  std::size_t interaction_count = 300;
  double interaction_scale = 0.01;
  // Noise of a final from-scratch evaluation; 0 makes it exact.
  double noise_sigma_eval = 0.0;

  void validate() const;
};

class Landscape {
 public:
  Landscape(SearchSpaceSchema schema, LandscapeConfig cfg);

  const SearchSpaceSchema& schema() const { return schema_; }
  const LandscapeConfig& config() const { return cfg_; }

  // In (0, 1); deterministic. The encoding must be valid for the schema.
  double true_loss(const Encoding& e) const;
  double true_loss(const Path& p) const;

  // true_loss plus N(0, noise_sigma_eval) keyed by (noise_seed, eval_index).
  double observed_loss(const Encoding& e, std::uint64_t noise_seed,
                       std::uint64_t eval_index) const;

  // Exact minimizer when interaction_count == 0; throws ValidationError
  // otherwise. Ties go to the smaller symbol.
  Path separable_minimum() const;

 private:
  struct Interaction {
    std::size_t pos_a;
    Token sym_a;
    std::size_t pos_b;
    Token sym_b;
    double weight;
  };

  double raw_score(const Encoding& e) const;

  SearchSpaceSchema schema_;
  LandscapeConfig cfg_;
  std::vector<std::vector<double>> unary_;
  std::vector<Interaction> interactions_;
};

struct SupernetConfig {
  // lambda: bias of a completely untrained path.
  double coadaptation_strength = 30.0;
  // gamma: per-step maturity gain of every entry a trained path selects.
  double maturity_gain = 0.002;
  // gamma_ft: fraction of the remaining bias removed per fine-tune step.
  double fine_tune_gain = 0.001;
  // sigma_p: proxy evaluation noise.
  double proxy_noise = 0.0005;
  // Fraction of training steps with a linearly decaying chance of updating
  // every entry at once.
  double warmup_fraction = 0.1;

  void validate() const;
};

class SupernetState {
 public:
  SupernetState() = default;
  SupernetState(const SearchSpaceSchema& schema, SupernetConfig cfg);

  const SupernetConfig& config() const { return cfg_; }
  std::uint64_t train_step_count() const { return steps_; }
  double maturity(std::size_t pos, Token symbol) const {
    return maturity_[pos][symbol];
  }
  const std::vector<std::vector<double>>& maturity_table() const {
    return maturity_;
  }
  // Whether `pos` carries trainable entries.
  bool is_choice_position(std::size_t pos) const { return choice_[pos]; }

  // Mean maturity of the entries selected by `e` (1 if it has none).
  double mean_maturity(const Encoding& e) const;

  // Rebuild from persisted values; throws ValidationError if the table shape
  // does not match the schema or a value lies outside [0, 1].
  static SupernetState restore(const SearchSpaceSchema& schema,
                               SupernetConfig cfg,
                               std::vector<std::vector<double>> maturity,
                               std::uint64_t steps);

 private:
  friend SupernetState train_supernet(const SupernetState&,
                                      std::span<const Encoding>, std::size_t,
                                      std::uint64_t);

  void update_entry(std::size_t pos, Token symbol);

  SupernetConfig cfg_;
  std::vector<std::vector<double>> maturity_;
  std::vector<char> choice_;
  std::uint64_t steps_ = 0;
};

// Trains for `steps` steps, cycling through `stream` in order. During the
// warm-up prefix, step s updates every entry with probability
// 1 - s / warmup_steps instead of only the path's entries. Throws
// ValidationError for steps == 0 or an empty stream.
SupernetState train_supernet(const SupernetState& state,
                             std::span<const Encoding> stream,
                             std::size_t steps, std::uint64_t seed);

// Bias term lambda * (1 - mean maturity) * (1 - gamma_ft)^fine_tune_steps.
double proxy_bias(const Encoding& e, const SupernetState& state,
                  std::size_t fine_tune_steps);

double proxy_loss(const Encoding& e, const SupernetState& state,
                  const Landscape& landscape, std::size_t fine_tune_steps,
                  std::uint64_t noise_seed, std::uint64_t eval_index);

// Sequential proxy evaluation with a running evaluation counter.
class ProxyEvaluator {
 public:
  ProxyEvaluator(const Landscape& landscape, const SupernetState& state,
                 std::size_t fine_tune_steps, std::uint64_t noise_seed)
      : landscape_(landscape),
        state_(state),
        fine_tune_steps_(fine_tune_steps),
        noise_seed_(noise_seed) {}

  double operator()(const Encoding& e) {
    return proxy_loss(e, state_, landscape_, fine_tune_steps_, noise_seed_,
                      counter_++);
  }
  std::uint64_t evaluations() const { return counter_; }

 private:
  const Landscape& landscape_;
  const SupernetState& state_;
  std::size_t fine_tune_steps_;
  std::uint64_t noise_seed_;
  std::uint64_t counter_ = 0;
};

// Pool with a skewed symbol distribution at every choice position, standing
// in for the performance-biased output of a first-shot search. skew = 0 is
// uniform; larger values concentrate each position on fewer symbols.
std::vector<Encoding> synthetic_pool(const SearchSpaceSchema& schema,
                                     std::size_t size, double skew,
                                     std::uint64_t seed);

}  // namespace twoshot

#endif  // TWOSHOT_SURROGATE_H_
