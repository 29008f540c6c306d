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
#include <limits>

#include "test_support.h"
#include "twoshot/metrics.h"
#include "twoshot/surrogate.h"

namespace twoshot {
namespace {

using testing::enumerable_schema;

TEST(LandscapeTest, DeterministicAndBounded) {
  const SearchSpaceSchema s;
  const Landscape a(s, LandscapeConfig{}), b(s, LandscapeConfig{});
  LandscapeConfig other;
  other.rng_seed = 2;
  const Landscape c(s, other);
  Rng rng(1);
  bool differs = false;
  for (int t = 0; t < 200; ++t) {
    const Encoding e = encode(random_path(s, rng), s);
    const double v = a.true_loss(e);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
    EXPECT_EQ(v, b.true_loss(e));
    EXPECT_EQ(v, a.true_loss(decode(e, s)));
    EXPECT_EQ(v, a.observed_loss(e, 5, t));
    differs |= v != c.true_loss(e);
  }
  EXPECT_TRUE(differs);
}

TEST(LandscapeTest, ObservedLossNoise) {
  const SearchSpaceSchema s;
  LandscapeConfig cfg;
  cfg.noise_sigma_eval = 0.01;
  const Landscape land(s, cfg);
  const Encoding e = encode(random_path(s, 3), s);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double d = land.observed_loss(e, 9, i) - land.true_loss(e);
    sum += d;
    sq += d * d;
  }
  EXPECT_NEAR(sum / n, 0.0, 5 * 0.01 / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(sq / n), 0.01, 0.0005);
  EXPECT_EQ(land.observed_loss(e, 9, 4), land.observed_loss(e, 9, 4));
}

TEST(LandscapeTest, SeparableMinimumMatchesExhaustiveSearch) {
  const SearchSpaceSchema s = enumerable_schema();
  LandscapeConfig cfg;
  cfg.interaction_count = 0;
  cfg.unary_weight_scale = 0.5;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.rng_seed = seed;
    const Landscape land(s, cfg);
    double best = std::numeric_limits<double>::infinity();
    for (const Path& p : enumerate_paths(s)) {
      best = std::min(best, land.true_loss(p));
    }
    EXPECT_EQ(land.true_loss(land.separable_minimum()), best);
  }
  EXPECT_THROW(Landscape(s, LandscapeConfig{}).separable_minimum(),
               ValidationError);
}

TEST(LandscapeTest, RejectsBadInput) {
  const SearchSpaceSchema s;
  LandscapeConfig cfg;
  cfg.noise_sigma_eval = -1.0;
  EXPECT_THROW(Landscape(s, cfg), ValidationError);
  const Landscape land(s, LandscapeConfig{});
  EXPECT_THROW(land.true_loss(Encoding{{0, 1}}), ValidationError);
}

SupernetConfig plain_config(double gain) {
  SupernetConfig c;
  c.maturity_gain = gain;
  c.warmup_fraction = 0.0;
  c.proxy_noise = 0.0;
  return c;
}

TEST(SupernetTest, MaturityClosedForm) {
  const SearchSpaceSchema s;
  const double gamma = 0.01;
  const SupernetState fresh(s, plain_config(gamma));
  const Encoding e = encode(random_path(s, 4), s);
  const std::vector<Encoding> stream{e};
  const std::size_t steps = 137;
  const SupernetState trained = train_supernet(fresh, stream, steps, 1);
  EXPECT_EQ(trained.train_step_count(), steps);
  const double expected = 1.0 - std::pow(1.0 - gamma, steps);
  for (std::size_t p = 0; p < e.size(); ++p) {
    for (std::size_t sym = 0; sym < trained.maturity_table()[p].size(); ++sym) {
      const double m = trained.maturity(p, static_cast<Token>(sym));
      if (trained.is_choice_position(p) && sym == e[p]) {
        EXPECT_NEAR(m, expected, 1e-12);
      } else {
        EXPECT_EQ(m, 0.0);
      }
    }
  }
  EXPECT_NEAR(trained.mean_maturity(e), expected, 1e-12);
}

TEST(SupernetTest, ChoicePositionsAreReachableChoices) {
  const SearchSpaceSchema s;
  const SupernetState st(s, SupernetConfig{});
  for (std::size_t p = 0; p < s.encoding_length(); ++p) {
    EXPECT_EQ(st.is_choice_position(p), s.reachable_cardinality(p) >= 2);
  }
}

TEST(SupernetTest, FullWarmupUpdatesEveryEntry) {
  const SearchSpaceSchema s;
  SupernetConfig c = plain_config(0.1);
  c.warmup_fraction = 1.0;
  const std::vector<Encoding> stream{encode(random_path(s, 5), s)};
  // Step 0 of the warm-up updates everything with probability 1.
  const SupernetState st =
      train_supernet(SupernetState(s, c), stream, 1, 3);
  for (std::size_t p = 0; p < s.encoding_length(); ++p) {
    if (!st.is_choice_position(p)) continue;
    for (double m : st.maturity_table()[p]) EXPECT_NEAR(m, 0.1, 1e-15);
  }
}

TEST(SupernetTest, StreamIsCycled) {
  const SearchSpaceSchema s;
  const SupernetState fresh(s, plain_config(0.05));
  const Encoding a = encode(random_path(s, 6), s);
  const Encoding b = encode(random_path(s, 7), s);
  const std::vector<Encoding> ab{a, b};
  const SupernetState st = train_supernet(fresh, ab, 4, 0);
  // Each path was visited twice; entries both share were updated 4 times.
  for (std::size_t p = 0; p < a.size(); ++p) {
    if (!st.is_choice_position(p)) continue;
    const int visits = a[p] == b[p] ? 4 : 2;
    EXPECT_NEAR(st.maturity(p, a[p]), 1.0 - std::pow(0.95, visits), 1e-12);
  }
}

TEST(SupernetTest, ProxyBiasAndLoss) {
  const SearchSpaceSchema s;
  SupernetConfig c = plain_config(0.02);
  c.coadaptation_strength = 3.0;
  c.fine_tune_gain = 0.01;
  const Landscape land(s, LandscapeConfig{});
  const Encoding e = encode(random_path(s, 8), s);
  const std::vector<Encoding> stream{e};
  const SupernetState st = train_supernet(SupernetState(s, c), stream, 50, 0);
  const double m = st.mean_maturity(e);
  const double bias = 3.0 * (1.0 - m) * std::pow(0.99, 20);
  EXPECT_NEAR(proxy_bias(e, st, 20), bias, 1e-12);
  EXPECT_NEAR(proxy_loss(e, st, land, 20, 1, 0), land.true_loss(e) + bias,
              1e-12);
  EXPECT_LT(proxy_bias(e, st, 100), proxy_bias(e, st, 20));
  EXPECT_NEAR(proxy_bias(e, SupernetState(s, c), 0), 3.0, 1e-12);
}

TEST(SupernetTest, ProxyNoiseIsKeyed) {
  const SearchSpaceSchema s;
  SupernetConfig c;
  c.proxy_noise = 0.1;
  const SupernetState st(s, c);
  const Landscape land(s, LandscapeConfig{});
  const Encoding e = encode(random_path(s, 9), s);
  EXPECT_EQ(proxy_loss(e, st, land, 0, 3, 7), proxy_loss(e, st, land, 0, 3, 7));
  EXPECT_NE(proxy_loss(e, st, land, 0, 3, 7), proxy_loss(e, st, land, 0, 3, 8));
  ProxyEvaluator eval(land, st, 0, 3);
  EXPECT_EQ(eval(e), proxy_loss(e, st, land, 0, 3, 0));
  EXPECT_EQ(eval(e), proxy_loss(e, st, land, 0, 3, 1));
  EXPECT_EQ(eval.evaluations(), 2u);
}

TEST(SupernetTest, RestoreValidates) {
  const SearchSpaceSchema s;
  const SupernetState st(s, SupernetConfig{});
  auto table = st.maturity_table();
  const SupernetState same =
      SupernetState::restore(s, SupernetConfig{}, table, 12);
  EXPECT_EQ(same.train_step_count(), 12u);
  table[0].push_back(0.0);
  EXPECT_THROW(SupernetState::restore(s, SupernetConfig{}, table, 0),
               ValidationError);
  table = st.maturity_table();
  table.back()[0] = 1.5;
  EXPECT_THROW(SupernetState::restore(s, SupernetConfig{}, table, 0),
               ValidationError);
}

TEST(SupernetTest, TrainingRejectsBadInput) {
  const SearchSpaceSchema s;
  const SupernetState st(s, SupernetConfig{});
  const std::vector<Encoding> none;
  EXPECT_THROW(train_supernet(st, none, 5, 0), ValidationError);
  const std::vector<Encoding> one{encode(random_path(s, 1), s)};
  EXPECT_THROW(train_supernet(st, one, 0, 0), ValidationError);
  SupernetConfig bad;
  bad.maturity_gain = 1.5;
  EXPECT_THROW(SupernetState(s, bad), ValidationError);
}

TEST(SyntheticPoolTest, ValidAndSkewed) {
  const SearchSpaceSchema s;
  const auto flat = synthetic_pool(s, 2000, 0.0, 1);
  const auto skewed = synthetic_pool(s, 2000, 2.0, 1);
  for (const Encoding& e : skewed) validate_encoding(e, s);
  for (const Encoding& e : flat) validate_encoding(e, s);
  EXPECT_LT(shannon_entropy(PathSet(skewed)), shannon_entropy(PathSet(flat)));
  EXPECT_EQ(synthetic_pool(s, 50, 1.0, 4), synthetic_pool(s, 50, 1.0, 4));
  EXPECT_THROW(synthetic_pool(s, 5, -1.0, 0), ValidationError);
}

}  // namespace
}  // namespace twoshot
