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

#include "twoshot/evolution.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <unordered_set>

namespace twoshot {

namespace {

bool before(const EvaluatedPath& a, const EvaluatedPath& b) {
  if (a.fitness != b.fitness) return a.fitness < b.fitness;
  return a.encoding < b.encoding;
}

// Row of `pos` stays non-empty after setting it to `symbol`.
bool keeps_row(const Encoding& e, const SearchSpaceSchema& schema,
               std::size_t pos, Token symbol) {
  if (pos >= schema.intra_section_offset() || symbol != 0) return true;
  const std::size_t n = static_cast<std::size_t>(schema.num_blocks());
  const std::size_t row_start = pos - pos % n;
  for (std::size_t p = row_start; p < row_start + n; ++p) {
    if (p != pos && e[p] != 0) return true;
  }
  return false;
}

std::vector<double> evaluate(const FitnessFn& fitness,
                             std::span<const Encoding> batch,
                             std::size_t generation) {
  std::vector<double> f;
  try {
    f = fitness(batch);
  } catch (const std::exception& ex) {
    throw FitnessError(generation, ex.what());
  }
  if (f.size() != batch.size()) {
    throw FitnessError(generation, "fitness returned " +
                                       std::to_string(f.size()) +
                                       " values for " +
                                       std::to_string(batch.size()) + " paths");
  }
  for (double v : f) {
    if (!std::isfinite(v)) throw FitnessError(generation, "non-finite fitness");
  }
  return f;
}

}  // namespace

FitnessSource parse_fitness_source(const std::string& name) {
  if (name == "predictor") return FitnessSource::kPredictor;
  if (name == "proxy") return FitnessSource::kProxy;
  if (name == "true") return FitnessSource::kTrue;
  throw ValidationError("unknown fitness source '" + name + "'");
}

std::string fitness_source_name(FitnessSource source) {
  switch (source) {
    case FitnessSource::kPredictor: return "predictor";
    case FitnessSource::kProxy: return "proxy";
    default: return "true";
  }
}

void EvolutionConfig::validate() const {
  if (population_size < 1) throw ValidationError("evolution: population_size must be >= 1");
  if (tournament_size < 1 || tournament_size > population_size) {
    throw ValidationError("evolution: tournament_size must be in [1, population_size]");
  }
  if (children_per_generation < 1) {
    throw ValidationError("evolution: children_per_generation must be >= 1");
  }
  if (children_kept > children_per_generation) {
    throw ValidationError("evolution: children_kept exceeds children_per_generation");
  }
  if (children_kept > population_size) {
    throw ValidationError("evolution: children_kept exceeds population_size");
  }
}

std::vector<EvaluatedPath> EvolutionResult::best_k(std::size_t k) const {
  std::unordered_set<Encoding, EncodingHash> seen;
  std::vector<EvaluatedPath> distinct;
  for (const EvaluatedPath& p : all_evaluated) {
    if (seen.insert(p.encoding).second) distinct.push_back(p);
  }
  std::stable_sort(distinct.begin(), distinct.end(), before);
  if (distinct.size() > k) distinct.resize(k);
  return distinct;
}

Encoding mutate(const Encoding& parent, const SearchSpaceSchema& schema,
                Rng& rng) {
  if (parent.size() != schema.encoding_length()) {
    throw ValidationError("mutate: encoding length mismatch");
  }
  std::vector<std::size_t> mutable_pos;
  int max_card = 1;
  for (std::size_t p = 0; p < parent.size(); ++p) {
    if (schema.reachable_cardinality(p) >= 2) {
      mutable_pos.push_back(p);
      max_card = std::max(max_card, schema.cardinalities()[p]);
    }
  }
  if (mutable_pos.empty()) {
    throw ValidationError("mutate: the search space holds a single path");
  }
  const std::size_t max_attempts =
      mutable_pos.size() * static_cast<std::size_t>(max_card);
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    const std::size_t pos = mutable_pos[rng.uniform_index(mutable_pos.size())];
    const int card = schema.cardinalities()[pos];
    auto symbol = static_cast<Token>(rng.uniform_index(card - 1));
    if (symbol >= parent[pos]) ++symbol;
    if (!keeps_row(parent, schema, pos, symbol)) continue;
    Encoding child = parent;
    child.tokens[pos] = symbol;
    return child;
  }
  // Deterministic scan from a random start.
  const std::size_t start = rng.uniform_index(mutable_pos.size());
  for (std::size_t k = 0; k < mutable_pos.size(); ++k) {
    const std::size_t pos = mutable_pos[(start + k) % mutable_pos.size()];
    for (int s = 0; s < schema.cardinalities()[pos]; ++s) {
      const auto symbol = static_cast<Token>(s);
      if (symbol == parent[pos] || !keeps_row(parent, schema, pos, symbol)) {
        continue;
      }
      Encoding child = parent;
      child.tokens[pos] = symbol;
      return child;
    }
  }
  throw ValidationError("mutate: no valid single-position change exists");
}

Path mutate(const Path& parent, const SearchSpaceSchema& schema, Rng& rng) {
  return decode(mutate(encode(parent, schema), schema, rng), schema);
}

EvolutionResult evolve(const EvolutionConfig& cfg,
                       const SearchSpaceSchema& schema,
                       const FitnessFn& fitness,
                       std::span<const Encoding> initial_population) {
  cfg.validate();
  Rng rng(cfg.rng_seed);
  EvolutionResult result;

  std::vector<Encoding> init;
  if (initial_population.empty()) {
    init.reserve(cfg.population_size);
    for (std::size_t i = 0; i < cfg.population_size; ++i) {
      init.push_back(encode(random_path(schema, rng), schema));
    }
  } else {
    if (initial_population.size() != cfg.population_size) {
      throw ValidationError("evolve: initial population has " +
                            std::to_string(initial_population.size()) +
                            " members, expected " +
                            std::to_string(cfg.population_size));
    }
    for (const Encoding& e : initial_population) validate_encoding(e, schema);
    init.assign(initial_population.begin(), initial_population.end());
  }
  const std::vector<double> init_fit = evaluate(fitness, init, 0);
  result.evaluations += init.size();
  std::deque<EvaluatedPath> population;
  for (std::size_t i = 0; i < init.size(); ++i) {
    population.push_back({init[i], init_fit[i], 0});
  }
  result.all_evaluated.assign(population.begin(), population.end());

  std::vector<std::size_t> slots(cfg.population_size);
  std::vector<Encoding> children;
  for (std::size_t g = 1; g <= cfg.generations; ++g) {
    // Partial Fisher-Yates picks the tournament without replacement.
    std::iota(slots.begin(), slots.end(), 0);
    std::size_t parent = slots.size();
    for (std::size_t t = 0; t < cfg.tournament_size; ++t) {
      const std::size_t j = t + rng.uniform_index(slots.size() - t);
      std::swap(slots[t], slots[j]);
      if (parent == slots.size() ||
          before(population[slots[t]], population[parent])) {
        parent = slots[t];
      }
    }
    children.clear();
    for (std::size_t c = 0; c < cfg.children_per_generation; ++c) {
      children.push_back(mutate(population[parent].encoding, schema, rng));
    }
    const std::vector<double> fit = evaluate(fitness, children, g);
    result.evaluations += children.size();
    std::vector<EvaluatedPath> scored;
    for (std::size_t c = 0; c < children.size(); ++c) {
      scored.push_back({children[c], fit[c], g});
    }
    std::stable_sort(scored.begin(), scored.end(), before);
    for (std::size_t k = 0; k < cfg.children_kept; ++k) {
      population.push_back(scored[k]);
      population.pop_front();
      result.all_evaluated.push_back(scored[k]);
    }
  }
  result.final_population.assign(population.begin(), population.end());
  return result;
}

EvolutionResult random_search(const SearchSpaceSchema& schema,
                              std::size_t evaluations, std::uint64_t seed,
                              const FitnessFn& fitness) {
  Rng rng(seed);
  std::vector<Encoding> batch;
  batch.reserve(evaluations);
  for (std::size_t i = 0; i < evaluations; ++i) {
    batch.push_back(encode(random_path(schema, rng), schema));
  }
  const std::vector<double> fit = evaluate(fitness, batch, 0);
  EvolutionResult result;
  result.evaluations = evaluations;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    result.all_evaluated.push_back({batch[i], fit[i], 0});
  }
  result.final_population = result.all_evaluated;
  return result;
}

}  // namespace twoshot
