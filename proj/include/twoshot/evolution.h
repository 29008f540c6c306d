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

#ifndef TWOSHOT_EVOLUTION_H_
#define TWOSHOT_EVOLUTION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "twoshot/search_space.h"

namespace twoshot {

enum class FitnessSource { kPredictor, kProxy, kTrue };

FitnessSource parse_fitness_source(const std::string& name);
std::string fitness_source_name(FitnessSource source);

// Regularized (aging) evolution. Each generation picks the best of a uniform
// tournament, mutates it `children_per_generation` times, admits the
// `children_kept` best children and retires as many of the oldest members.
struct EvolutionConfig {
  std::size_t population_size = 128;
  std::size_t tournament_size = 64;
  std::size_t children_per_generation = 8;
  std::size_t children_kept = 8;
  std::size_t generations = 240;
  FitnessSource fitness_source = FitnessSource::kProxy;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct EvaluatedPath {
  Encoding encoding;
  double fitness = 0.0;
  std::size_t generation = 0;
};

struct EvolutionResult {
  // Every member ever admitted to the population, in admission order:
  // population_size + children_kept * generations entries.
  std::vector<EvaluatedPath> all_evaluated;
  std::vector<EvaluatedPath> final_population;
  // Fitness calls, including children that were not admitted.
  std::uint64_t evaluations = 0;

  // The k lowest-fitness distinct encodings of all_evaluated, ordered by
  // (fitness, encoding); the first occurrence of an encoding is used.
  std::vector<EvaluatedPath> best_k(std::size_t k) const;
};

// Batch fitness (lower is better).
using FitnessFn =
    std::function<std::vector<double>(std::span<const Encoding>)>;

// Raised when the fitness function fails or returns a non-finite value.
class FitnessError : public std::runtime_error {
 public:
  FitnessError(std::size_t generation, const std::string& what)
      : std::runtime_error("generation " + std::to_string(generation) + ": " +
                           what),
        generation_(generation) {}
  std::size_t generation() const { return generation_; }

 private:
  std::size_t generation_;
};

// Resamples exactly one position to a different symbol while keeping every
// connectivity row non-empty. Throws ValidationError if the schema has a
// single path.
Encoding mutate(const Encoding& parent, const SearchSpaceSchema& schema,
                Rng& rng);
Path mutate(const Path& parent, const SearchSpaceSchema& schema, Rng& rng);

// The initial population is drawn uniformly at random unless
// `initial_population` is given, in which case it must hold exactly
// population_size valid encodings.
EvolutionResult evolve(const EvolutionConfig& cfg,
                       const SearchSpaceSchema& schema,
                       const FitnessFn& fitness,
                       std::span<const Encoding> initial_population = {});

// Budget-matched baseline: `evaluations` uniformly random paths.
EvolutionResult random_search(const SearchSpaceSchema& schema,
                              std::size_t evaluations, std::uint64_t seed,
                              const FitnessFn& fitness);

}  // namespace twoshot

#endif  // TWOSHOT_EVOLUTION_H_
