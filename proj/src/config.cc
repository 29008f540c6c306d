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

#include "twoshot/config.h"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace twoshot {

namespace {

const char* const kSeedSections[] = {
    "landscape", "first_shot", "predictor", "first_shot_evolution",
    "fgps",      "second_shot", "second_shot_evolution"};

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void check_keys(const YAML::Node& node, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, const std::string& where,
          T& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + "." + key + ": invalid value");
  }
}

void read_size(const YAML::Node& node, const char* key,
               const std::string& where, std::size_t& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  long long x = 0;
  try {
    x = v.as<long long>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + "." + key + ": expected an integer");
  }
  if (x < 0) throw ConfigError(where + "." + key + ": must be >= 0");
  out = static_cast<std::size_t>(x);
}

void read_seed(const YAML::Node& node, const std::string& section,
               RunConfig& cfg) {
  const YAML::Node v = node["rng_seed"];
  if (!v) return;
  try {
    cfg.explicit_seeds[section] = v.as<std::uint64_t>();
  } catch (const YAML::Exception&) {
    throw ConfigError(section + ".rng_seed: expected an unsigned integer");
  }
}

SearchSpaceSchema schema_from_node(const YAML::Node& node) {
  check_keys(node, "schema",
             {"num_blocks", "dense_ops", "sparse_ops", "interactions",
              "dense_dims", "sparse_dims", "merger_toggles"});
  SearchSpaceSchema::Menus m;
  read(node, "num_blocks", "schema", m.num_blocks);
  read(node, "dense_ops", "schema", m.dense_ops);
  read(node, "sparse_ops", "schema", m.sparse_ops);
  read(node, "interactions", "schema", m.interactions);
  read(node, "dense_dims", "schema", m.dense_dims);
  read(node, "sparse_dims", "schema", m.sparse_dims);
  read(node, "merger_toggles", "schema", m.merger_toggles);
  try {
    return SearchSpaceSchema(std::move(m));
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

EvolutionConfig evolution_from_node(const YAML::Node& node,
                                    const std::string& where,
                                    EvolutionConfig cfg) {
  check_keys(node, where,
             {"population_size", "tournament_size", "children_per_generation",
              "children_kept", "generations", "fitness_source", "rng_seed"});
  read_size(node, "population_size", where, cfg.population_size);
  read_size(node, "tournament_size", where, cfg.tournament_size);
  read_size(node, "children_per_generation", where,
            cfg.children_per_generation);
  read_size(node, "children_kept", where, cfg.children_kept);
  read_size(node, "generations", where, cfg.generations);
  if (node["fitness_source"]) {
    try {
      cfg.fitness_source =
          parse_fitness_source(node["fitness_source"].as<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(where + ".fitness_source: " + e.what());
    }
  }
  return cfg;
}

void emit_double(YAML::Emitter& out, const char* key, double v) {
  out << YAML::Key << key << YAML::Value << format_double(v);
}

void emit_size(YAML::Emitter& out, const char* key, std::uint64_t v) {
  out << YAML::Key << key << YAML::Value << v;
}

void emit_schema_body(YAML::Emitter& out, const SearchSpaceSchema& schema) {
  const auto& m = schema.menus();
  out << YAML::BeginMap;
  out << YAML::Key << "num_blocks" << YAML::Value << m.num_blocks;
  out << YAML::Key << "dense_ops" << YAML::Value << YAML::Flow << m.dense_ops;
  out << YAML::Key << "sparse_ops" << YAML::Value << YAML::Flow << m.sparse_ops;
  out << YAML::Key << "interactions" << YAML::Value << YAML::Flow
      << m.interactions;
  out << YAML::Key << "dense_dims" << YAML::Value << YAML::Flow << m.dense_dims;
  out << YAML::Key << "sparse_dims" << YAML::Value << YAML::Flow
      << m.sparse_dims;
  out << YAML::Key << "merger_toggles" << YAML::Value << YAML::Flow
      << m.merger_toggles;
  out << YAML::EndMap;
}

void emit_evolution(YAML::Emitter& out, const EvolutionConfig& e) {
  out << YAML::BeginMap;
  emit_size(out, "population_size", e.population_size);
  emit_size(out, "tournament_size", e.tournament_size);
  emit_size(out, "children_per_generation", e.children_per_generation);
  emit_size(out, "children_kept", e.children_kept);
  emit_size(out, "generations", e.generations);
  out << YAML::Key << "fitness_source" << YAML::Value
      << fitness_source_name(e.fitness_source);
  emit_size(out, "rng_seed", e.rng_seed);
  out << YAML::EndMap;
}

void emit_section_body(YAML::Emitter& out, const RunConfig& cfg,
                       const std::string& section) {
  if (section == "schema") {
    emit_schema_body(out, cfg.schema);
  } else if (section == "landscape") {
    out << YAML::BeginMap;
    emit_size(out, "rng_seed", cfg.landscape.rng_seed);
    emit_double(out, "unary_weight_scale", cfg.landscape.unary_weight_scale);
    emit_size(out, "interaction_count", cfg.landscape.interaction_count);
    emit_double(out, "interaction_scale", cfg.landscape.interaction_scale);
    emit_double(out, "noise_sigma_eval", cfg.landscape.noise_sigma_eval);
    out << YAML::EndMap;
  } else if (section == "supernet") {
    out << YAML::BeginMap;
    emit_double(out, "coadaptation_strength",
                cfg.supernet.coadaptation_strength);
    emit_double(out, "maturity_gain", cfg.supernet.maturity_gain);
    emit_double(out, "fine_tune_gain", cfg.supernet.fine_tune_gain);
    emit_double(out, "proxy_noise", cfg.supernet.proxy_noise);
    emit_double(out, "warmup_fraction", cfg.supernet.warmup_fraction);
    out << YAML::EndMap;
  } else if (section == "first_shot") {
    out << YAML::BeginMap;
    emit_size(out, "train_steps", cfg.first_shot_steps);
    emit_size(out, "predictor_samples", cfg.predictor_samples);
    emit_size(out, "fine_tune_steps", cfg.fine_tune_steps);
    emit_size(out, "rng_seed", cfg.seed_for("first_shot"));
    out << YAML::EndMap;
  } else if (section == "predictor") {
    const PredictorConfig& p = cfg.predictor;
    out << YAML::BeginMap;
    emit_size(out, "embedding_dim", p.embedding_dim);
    out << YAML::Key << "hidden_layer_sizes" << YAML::Value << YAML::Flow
        << YAML::BeginSeq;
    for (std::size_t h : p.hidden_layer_sizes) out << static_cast<std::uint64_t>(h);
    out << YAML::EndSeq;
    emit_double(out, "learning_rate", p.learning_rate);
    emit_size(out, "epochs", p.epochs);
    emit_size(out, "batch_size", p.batch_size);
    emit_double(out, "train_fraction", p.train_fraction);
    out << YAML::Key << "refit_on_full_data" << YAML::Value
        << p.refit_on_full_data;
    emit_size(out, "rng_seed", p.rng_seed);
    out << YAML::EndMap;
  } else if (section == "first_shot_evolution") {
    emit_evolution(out, cfg.first_shot_evolution);
  } else if (section == "fgps") {
    const FgpsConfig& f = cfg.fgps;
    out << YAML::BeginMap;
    emit_size(out, "initial_size", f.initial_size);
    emit_size(out, "candidate_budget", f.candidate_budget);
    emit_size(out, "retain_per_iter", f.retain_per_iter);
    emit_size(out, "max_selected", f.max_selected);
    emit_double(out, "bottom_filter_fraction", f.bottom_filter_fraction);
    out << YAML::Key << "metric" << YAML::Value << metric_name(f.metric);
    emit_size(out, "rng_seed", f.rng_seed);
    out << YAML::EndMap;
  } else if (section == "second_shot") {
    out << YAML::BeginMap;
    emit_size(out, "train_steps", cfg.second_shot_steps);
    emit_double(out, "maturity_gain", cfg.second_shot_supernet().maturity_gain);
    emit_size(out, "rng_seed", cfg.seed_for("second_shot"));
    out << YAML::EndMap;
  } else if (section == "second_shot_evolution") {
    emit_evolution(out, cfg.second_shot_evolution);
  } else if (section == "final") {
    out << YAML::BeginMap;
    emit_size(out, "top_k", cfg.top_k_final);
    emit_size(out, "ranking_top_k", cfg.ranking_top_k);
    out << YAML::EndMap;
  } else {
    throw ConfigError("unknown config section '" + section + "'");
  }
}

const char* const kSections[] = {
    "schema", "landscape", "supernet", "first_shot", "predictor",
    "first_shot_evolution", "fgps", "second_shot", "second_shot_evolution",
    "final"};

YAML::Node parse_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

RunConfig::RunConfig() {
  first_shot_evolution.population_size = 2000;
  first_shot_evolution.tournament_size = 5;
  first_shot_evolution.children_per_generation = 64;
  first_shot_evolution.children_kept = 10;
  first_shot_evolution.generations = 2000;
  first_shot_evolution.fitness_source = FitnessSource::kPredictor;

  fgps.max_selected = 2000;

  second_shot_evolution.population_size = 128;
  second_shot_evolution.tournament_size = 64;
  second_shot_evolution.children_per_generation = 8;
  second_shot_evolution.children_kept = 8;
  second_shot_evolution.generations = 240;
  second_shot_evolution.fitness_source = FitnessSource::kProxy;

  resolve_seeds();
}

SupernetConfig RunConfig::second_shot_supernet() const {
  SupernetConfig c = supernet;
  if (second_shot_maturity_gain) c.maturity_gain = *second_shot_maturity_gain;
  return c;
}

std::uint64_t RunConfig::seed_for(const std::string& section) const {
  auto it = explicit_seeds.find(section);
  if (it != explicit_seeds.end()) return it->second;
  return derive_seed(master_seed, section);
}

void RunConfig::resolve_seeds() {
  landscape.rng_seed = seed_for("landscape");
  predictor.rng_seed = seed_for("predictor");
  first_shot_evolution.rng_seed = seed_for("first_shot_evolution");
  fgps.rng_seed = seed_for("fgps");
  second_shot_evolution.rng_seed = seed_for("second_shot_evolution");
}

void RunConfig::validate() const {
  try {
    landscape.validate();
    supernet.validate();
    second_shot_supernet().validate();
    predictor.validate();
    first_shot_evolution.validate();
    second_shot_evolution.validate();
    fgps.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  if (first_shot_steps == 0 || second_shot_steps == 0) {
    throw ConfigError("train_steps must be >= 1");
  }
  if (predictor_samples < 50) {
    throw ConfigError("first_shot.predictor_samples must be >= 50");
  }
  if (top_k_final == 0) throw ConfigError("final.top_k must be >= 1");
  if (ranking_top_k < 2) throw ConfigError("final.ranking_top_k must be >= 2");
  if (first_shot_evolution.fitness_source != FitnessSource::kPredictor) {
    throw ConfigError("first_shot_evolution.fitness_source must be predictor");
  }
  if (second_shot_evolution.fitness_source != FitnessSource::kProxy) {
    throw ConfigError("second_shot_evolution.fitness_source must be proxy");
  }
}

RunConfig parse_run_config(const std::string& yaml_text) {
  const YAML::Node root = parse_yaml(yaml_text);
  RunConfig cfg;
  if (!root || root.IsNull()) return cfg;
  check_keys(root, "config",
             {"master_seed", "schema", "landscape", "supernet", "first_shot",
              "predictor", "first_shot_evolution", "fgps", "second_shot",
              "second_shot_evolution", "final"});
  read(root, "master_seed", "config", cfg.master_seed);
  if (root["schema"]) cfg.schema = schema_from_node(root["schema"]);
  if (const YAML::Node n = root["landscape"]) {
    check_keys(n, "landscape",
               {"rng_seed", "unary_weight_scale", "interaction_count",
                "interaction_scale", "noise_sigma_eval"});
    read_seed(n, "landscape", cfg);
    read(n, "unary_weight_scale", "landscape", cfg.landscape.unary_weight_scale);
    read_size(n, "interaction_count", "landscape",
              cfg.landscape.interaction_count);
    read(n, "interaction_scale", "landscape", cfg.landscape.interaction_scale);
    read(n, "noise_sigma_eval", "landscape", cfg.landscape.noise_sigma_eval);
  }
  if (const YAML::Node n = root["supernet"]) {
    check_keys(n, "supernet",
               {"coadaptation_strength", "maturity_gain", "fine_tune_gain",
                "proxy_noise", "warmup_fraction"});
    read(n, "coadaptation_strength", "supernet",
         cfg.supernet.coadaptation_strength);
    read(n, "maturity_gain", "supernet", cfg.supernet.maturity_gain);
    read(n, "fine_tune_gain", "supernet", cfg.supernet.fine_tune_gain);
    read(n, "proxy_noise", "supernet", cfg.supernet.proxy_noise);
    read(n, "warmup_fraction", "supernet", cfg.supernet.warmup_fraction);
  }
  if (const YAML::Node n = root["first_shot"]) {
    check_keys(n, "first_shot",
               {"train_steps", "predictor_samples", "fine_tune_steps",
                "rng_seed"});
    read_seed(n, "first_shot", cfg);
    read_size(n, "train_steps", "first_shot", cfg.first_shot_steps);
    read_size(n, "predictor_samples", "first_shot", cfg.predictor_samples);
    read_size(n, "fine_tune_steps", "first_shot", cfg.fine_tune_steps);
  }
  if (const YAML::Node n = root["predictor"]) {
    check_keys(n, "predictor",
               {"embedding_dim", "hidden_layer_sizes", "learning_rate",
                "epochs", "batch_size", "train_fraction", "refit_on_full_data",
                "rng_seed"});
    read_seed(n, "predictor", cfg);
    PredictorConfig& p = cfg.predictor;
    read_size(n, "embedding_dim", "predictor", p.embedding_dim);
    read(n, "hidden_layer_sizes", "predictor", p.hidden_layer_sizes);
    read(n, "learning_rate", "predictor", p.learning_rate);
    read_size(n, "epochs", "predictor", p.epochs);
    read_size(n, "batch_size", "predictor", p.batch_size);
    read(n, "train_fraction", "predictor", p.train_fraction);
    read(n, "refit_on_full_data", "predictor", p.refit_on_full_data);
  }
  if (const YAML::Node n = root["first_shot_evolution"]) {
    read_seed(n, "first_shot_evolution", cfg);
    cfg.first_shot_evolution = evolution_from_node(n, "first_shot_evolution",
                                                   cfg.first_shot_evolution);
  }
  if (const YAML::Node n = root["fgps"]) {
    check_keys(n, "fgps",
               {"initial_size", "candidate_budget", "retain_per_iter",
                "max_selected", "bottom_filter_fraction", "metric", "rng_seed"});
    read_seed(n, "fgps", cfg);
    FgpsConfig& f = cfg.fgps;
    read_size(n, "initial_size", "fgps", f.initial_size);
    read_size(n, "candidate_budget", "fgps", f.candidate_budget);
    read_size(n, "retain_per_iter", "fgps", f.retain_per_iter);
    read_size(n, "max_selected", "fgps", f.max_selected);
    read(n, "bottom_filter_fraction", "fgps", f.bottom_filter_fraction);
    if (n["metric"]) {
      try {
        f.metric = parse_metric(n["metric"].as<std::string>());
      } catch (const std::exception& e) {
        throw ConfigError(std::string("fgps.metric: ") + e.what());
      }
    }
  }
  if (const YAML::Node n = root["second_shot"]) {
    check_keys(n, "second_shot", {"train_steps", "maturity_gain", "rng_seed"});
    read_seed(n, "second_shot", cfg);
    read_size(n, "train_steps", "second_shot", cfg.second_shot_steps);
    if (n["maturity_gain"]) {
      double g = 0.0;
      read(n, "maturity_gain", "second_shot", g);
      cfg.second_shot_maturity_gain = g;
    }
  }
  if (const YAML::Node n = root["second_shot_evolution"]) {
    read_seed(n, "second_shot_evolution", cfg);
    cfg.second_shot_evolution = evolution_from_node(
        n, "second_shot_evolution", cfg.second_shot_evolution);
  }
  if (const YAML::Node n = root["final"]) {
    check_keys(n, "final", {"top_k", "ranking_top_k"});
    read_size(n, "top_k", "final", cfg.top_k_final);
    read_size(n, "ranking_top_k", "final", cfg.ranking_top_k);
  }
  cfg.resolve_seeds();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  return parse_run_config(read_file(file));
}

std::string emit_section(const RunConfig& cfg, const std::string& section) {
  YAML::Emitter out;
  emit_section_body(out, cfg, section);
  return out.c_str();
}

std::string emit_run_config(const RunConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "master_seed" << YAML::Value << cfg.master_seed;
  for (const char* s : kSections) {
    out << YAML::Key << s << YAML::Value;
    emit_section_body(out, cfg, s);
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

SearchSpaceSchema parse_schema(const std::string& yaml_text) {
  const YAML::Node root = parse_yaml(yaml_text);
  if (!root || root.IsNull()) return SearchSpaceSchema();
  if (root.IsMap()) {
    for (const char* key :
         {"master_seed", "schema", "landscape", "supernet", "first_shot",
          "predictor", "first_shot_evolution", "fgps", "second_shot",
          "second_shot_evolution", "final"}) {
      if (root[key]) return parse_run_config(yaml_text).schema;
    }
  }
  return schema_from_node(root);
}

SearchSpaceSchema load_schema(const std::filesystem::path& file) {
  return parse_schema(read_file(file));
}

std::string emit_schema(const SearchSpaceSchema& schema) {
  YAML::Emitter out;
  emit_schema_body(out, schema);
  return std::string(out.c_str()) + "\n";
}

}  // namespace twoshot
