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

#include "twoshot/surrogate.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace twoshot {

namespace {

bool is_choice(const SearchSpaceSchema& schema, std::size_t pos) {
  return schema.reachable_cardinality(pos) >= 2;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void LandscapeConfig::validate() const {
  if (!(unary_weight_scale >= 0.0) || !(interaction_scale >= 0.0) ||
      !(noise_sigma_eval >= 0.0)) {
    throw ValidationError("landscape: scales must be non-negative");
  }
}

Landscape::Landscape(SearchSpaceSchema schema, LandscapeConfig cfg)
    : schema_(std::move(schema)), cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.rng_seed);
  const std::size_t len = schema_.encoding_length();
  std::vector<std::size_t> choices;
  unary_.resize(len);
  for (std::size_t p = 0; p < len; ++p) {
    unary_[p].assign(schema_.cardinalities()[p], 0.0);
    if (!is_choice(schema_, p)) continue;
    choices.push_back(p);
    for (double& u : unary_[p]) u = cfg_.unary_weight_scale * rng.normal();
  }
  if (choices.size() >= 2) {
    interactions_.reserve(cfg_.interaction_count);
    for (std::size_t k = 0; k < cfg_.interaction_count; ++k) {
      const std::size_t a = choices[rng.uniform_index(choices.size())];
      std::size_t b = a;
      while (b == a) b = choices[rng.uniform_index(choices.size())];
      Interaction it;
      it.pos_a = std::min(a, b);
      it.pos_b = std::max(a, b);
      it.sym_a = static_cast<Token>(
          rng.uniform_index(schema_.cardinalities()[it.pos_a]));
      it.sym_b = static_cast<Token>(
          rng.uniform_index(schema_.cardinalities()[it.pos_b]));
      it.weight = cfg_.interaction_scale * rng.normal();
      interactions_.push_back(it);
    }
  }
}

double Landscape::raw_score(const Encoding& e) const {
  if (e.size() != unary_.size()) {
    throw ValidationError("landscape: encoding length mismatch");
  }
  double s = 0.0;
  for (std::size_t p = 0; p < e.size(); ++p) s += unary_[p][e[p]];
  for (const Interaction& it : interactions_) {
    if (e[it.pos_a] == it.sym_a && e[it.pos_b] == it.sym_b) s += it.weight;
  }
  return s;
}

double Landscape::true_loss(const Encoding& e) const {
  return sigmoid(raw_score(e));
}

double Landscape::true_loss(const Path& p) const {
  return true_loss(encode(p, schema_));
}

double Landscape::observed_loss(const Encoding& e, std::uint64_t noise_seed,
                                std::uint64_t eval_index) const {
  const double t = true_loss(e);
  if (cfg_.noise_sigma_eval == 0.0) return t;
  return t + cfg_.noise_sigma_eval * counter_normal(noise_seed, eval_index);
}

Path Landscape::separable_minimum() const {
  if (!interactions_.empty()) {
    throw ValidationError(
        "separable_minimum requires a landscape without interactions");
  }
  Encoding e;
  e.tokens.assign(schema_.encoding_length(), 0);
  const int n = schema_.num_blocks();
  for (int j = 1; j <= n; ++j) {
    for (Branch br : {Branch::kDense, Branch::kSparse}) {
      const std::size_t start = schema_.connectivity_position(j, br, 0);
      bool any = false;
      std::size_t cheapest = start;
      double cheapest_cost = 0.0;
      for (int i = 0; i < j; ++i) {
        const std::size_t p = start + i;
        const double gain = unary_[p][1] - unary_[p][0];
        if (gain < 0.0) {
          e.tokens[p] = 1;
          any = true;
        }
        if (i == 0 || gain < cheapest_cost) {
          cheapest = p;
          cheapest_cost = gain;
        }
      }
      if (!any) e.tokens[cheapest] = 1;
    }
  }
  for (std::size_t p = schema_.intra_section_offset(); p < e.size(); ++p) {
    const auto& u = unary_[p];
    e.tokens[p] = static_cast<Token>(
        std::min_element(u.begin(), u.end()) - u.begin());
  }
  return decode(e, schema_);
}

void SupernetConfig::validate() const {
  if (!(coadaptation_strength >= 0.0) || !(proxy_noise >= 0.0)) {
    throw ValidationError(
        "supernet: coadaptation_strength and proxy_noise must be >= 0");
  }
  if (!(maturity_gain >= 0.0 && maturity_gain <= 1.0) ||
      !(fine_tune_gain >= 0.0 && fine_tune_gain <= 1.0)) {
    throw ValidationError("supernet: gains must be in [0, 1]");
  }
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) {
    throw ValidationError("supernet: warmup_fraction must be in [0, 1]");
  }
}

SupernetState::SupernetState(const SearchSpaceSchema& schema,
                             SupernetConfig cfg)
    : cfg_(cfg) {
  cfg_.validate();
  const std::size_t len = schema.encoding_length();
  maturity_.resize(len);
  choice_.resize(len);
  for (std::size_t p = 0; p < len; ++p) {
    maturity_[p].assign(schema.cardinalities()[p], 0.0);
    choice_[p] = is_choice(schema, p);
  }
}

SupernetState SupernetState::restore(const SearchSpaceSchema& schema,
                                     SupernetConfig cfg,
                                     std::vector<std::vector<double>> maturity,
                                     std::uint64_t steps) {
  SupernetState s(schema, cfg);
  if (maturity.size() != s.maturity_.size()) {
    throw ValidationError("supernet: maturity table length mismatch");
  }
  for (std::size_t p = 0; p < maturity.size(); ++p) {
    if (maturity[p].size() != s.maturity_[p].size()) {
      throw ValidationError("supernet: maturity row " + std::to_string(p) +
                            " has the wrong width");
    }
    for (double m : maturity[p]) {
      if (!(m >= 0.0 && m <= 1.0)) {
        throw ValidationError("supernet: maturity outside [0, 1]");
      }
    }
  }
  s.maturity_ = std::move(maturity);
  s.steps_ = steps;
  return s;
}

double SupernetState::mean_maturity(const Encoding& e) const {
  if (e.size() != maturity_.size()) {
    throw ValidationError("supernet: encoding length mismatch");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < e.size(); ++p) {
    if (!choice_[p]) continue;
    sum += maturity_[p][e[p]];
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 1.0;
}

void SupernetState::update_entry(std::size_t pos, Token symbol) {
  double& m = maturity_[pos][symbol];
  m += cfg_.maturity_gain * (1.0 - m);
  m = std::clamp(m, 0.0, 1.0);
}

SupernetState train_supernet(const SupernetState& state,
                             std::span<const Encoding> stream,
                             std::size_t steps, std::uint64_t seed) {
  if (steps == 0) throw ValidationError("train_supernet: steps must be >= 1");
  if (stream.empty()) throw ValidationError("train_supernet: empty path stream");
  for (const Encoding& e : stream) {
    if (e.size() != state.maturity_.size()) {
      throw ValidationError("train_supernet: encoding length mismatch");
    }
  }
  SupernetState out = state;
  Rng rng(seed);
  const auto warmup = static_cast<std::size_t>(
      std::floor(state.cfg_.warmup_fraction * static_cast<double>(steps)));
  for (std::size_t s = 0; s < steps; ++s) {
    bool whole = false;
    if (s < warmup) {
      const double p =
          1.0 - static_cast<double>(s) / static_cast<double>(warmup);
      whole = rng.bernoulli(p);
    }
    if (whole) {
      for (std::size_t pos = 0; pos < out.maturity_.size(); ++pos) {
        if (!out.choice_[pos]) continue;
        for (std::size_t sym = 0; sym < out.maturity_[pos].size(); ++sym) {
          out.update_entry(pos, static_cast<Token>(sym));
        }
      }
    } else {
      const Encoding& e = stream[s % stream.size()];
      for (std::size_t pos = 0; pos < e.size(); ++pos) {
        if (out.choice_[pos]) out.update_entry(pos, e[pos]);
      }
    }
    ++out.steps_;
  }
  return out;
}

double proxy_bias(const Encoding& e, const SupernetState& state,
                  std::size_t fine_tune_steps) {
  const SupernetConfig& cfg = state.config();
  return cfg.coadaptation_strength * (1.0 - state.mean_maturity(e)) *
         std::pow(1.0 - cfg.fine_tune_gain,
                  static_cast<double>(fine_tune_steps));
}

double proxy_loss(const Encoding& e, const SupernetState& state,
                  const Landscape& landscape, std::size_t fine_tune_steps,
                  std::uint64_t noise_seed, std::uint64_t eval_index) {
  double loss = landscape.true_loss(e) + proxy_bias(e, state, fine_tune_steps);
  const double sigma = state.config().proxy_noise;
  if (sigma > 0.0) loss += sigma * counter_normal(noise_seed, eval_index);
  return loss;
}

std::vector<Encoding> synthetic_pool(const SearchSpaceSchema& schema,
                                     std::size_t size, double skew,
                                     std::uint64_t seed) {
  if (!(skew >= 0.0)) throw ValidationError("synthetic_pool: skew must be >= 0");
  Rng rng(seed);
  const std::size_t len = schema.encoding_length();
  // Cumulative distribution per position over a random symbol ranking.
  std::vector<std::vector<double>> cdf(len);
  for (std::size_t p = 0; p < len; ++p) {
    const int c = schema.cardinalities()[p];
    std::vector<int> rank(c);
    std::iota(rank.begin(), rank.end(), 0);
    for (int i = c; i > 1; --i) std::swap(rank[i - 1], rank[rng.uniform_index(i)]);
    std::vector<double> w(c);
    double total = 0.0;
    for (int s = 0; s < c; ++s) total += (w[s] = std::exp(-skew * rank[s]));
    double acc = 0.0;
    cdf[p].resize(c);
    for (int s = 0; s < c; ++s) cdf[p][s] = (acc += w[s] / total);
    cdf[p].back() = 1.0;
  }
  auto draw = [&](std::size_t p) {
    const double u = rng.uniform01();
    const auto& c = cdf[p];
    return static_cast<Token>(std::upper_bound(c.begin(), c.end(), u) -
                              c.begin());
  };
  const int n = schema.num_blocks();
  std::vector<Encoding> pool(size);
  for (Encoding& e : pool) {
    e.tokens.assign(len, 0);
    for (int j = 1; j <= n; ++j) {
      for (Branch br : {Branch::kDense, Branch::kSparse}) {
        const std::size_t start = schema.connectivity_position(j, br, 0);
        bool any = false;
        while (!any) {
          for (int i = 0; i < j; ++i) {
            e.tokens[start + i] = j == 1 ? 1 : draw(start + i);
            any = any || e.tokens[start + i] != 0;
          }
        }
      }
    }
    for (std::size_t p = schema.intra_section_offset(); p < len; ++p) {
      e.tokens[p] = draw(p);
    }
  }
  return pool;
}

}  // namespace twoshot
