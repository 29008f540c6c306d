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

// YAML configuration for schemas and full pipeline runs.
//
// Every section is optional and falls back to the desk-scale defaults. Seeds
// that are not written explicitly are derived from `master_seed` and the
// section name, so changing one section's seed leaves the others intact.

#ifndef TWOSHOT_CONFIG_H_
#define TWOSHOT_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "twoshot/evolution.h"
#include "twoshot/predictor.h"
#include "twoshot/sampling.h"
#include "twoshot/search_space.h"
#include "twoshot/surrogate.h"

namespace twoshot {

struct RunConfig {
  SearchSpaceSchema schema;
  LandscapeConfig landscape;
  SupernetConfig supernet;

  std::size_t first_shot_steps = 2000;
  // Random paths proxy-evaluated to build the predictor's training data.
  std::size_t predictor_samples = 2000;
  // Fine-tune steps applied before every proxy evaluation.
  std::size_t fine_tune_steps = 500;
  PredictorConfig predictor;
  EvolutionConfig first_shot_evolution;
  FgpsConfig fgps;
  std::size_t second_shot_steps = 4000;
  // Maturity gain of second-shot training; unset means supernet's.
  std::optional<double> second_shot_maturity_gain = 0.05;
  EvolutionConfig second_shot_evolution;

  std::size_t top_k_final = 15;
  std::size_t ranking_top_k = 50;

  std::uint64_t master_seed = 0;
  // Section name -> seed written in the file. Everything else is derived.
  std::map<std::string, std::uint64_t> explicit_seeds;

  // Desk-scale defaults.
  RunConfig();

  // Supernet settings of the second-shot training.
  SupernetConfig second_shot_supernet() const;

  // Seed for `section`: the explicit one if present, else derived.
  std::uint64_t seed_for(const std::string& section) const;
  // Re-derive every non-explicit seed (call after changing master_seed).
  void resolve_seeds();
  // Throws ConfigError describing the first invalid field.
  void validate() const;
};

// Throws ConfigError on syntax errors, unknown keys or invalid values.
RunConfig parse_run_config(const std::string& yaml_text);
RunConfig load_run_config(const std::filesystem::path& file);
// Canonical text: sorted sections, every field and resolved seed written.
std::string emit_run_config(const RunConfig& cfg);

// Accepts either a bare schema mapping or a run config with a `schema` key.
SearchSpaceSchema parse_schema(const std::string& yaml_text);
SearchSpaceSchema load_schema(const std::filesystem::path& file);
std::string emit_schema(const SearchSpaceSchema& schema);

// Per-section canonical text, hashed for provenance.
std::string emit_section(const RunConfig& cfg, const std::string& section);

}  // namespace twoshot

#endif  // TWOSHOT_CONFIG_H_
