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

// Command line front end. Exit codes: 0 success, 2 configuration or input
// error, 3 stage failure, 1 anything else.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "twoshot/config.h"
#include "twoshot/evolution.h"
#include "twoshot/io.h"
#include "twoshot/metrics.h"
#include "twoshot/pipeline.h"
#include "twoshot/predictor.h"
#include "twoshot/sampling.h"
#include "twoshot/search_space.h"
#include "twoshot/surrogate.h"

namespace {

using namespace twoshot;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig() : load_run_config(path);
}

SearchSpaceSchema schema_from(const std::string& schema_file,
                              const std::string& config_file) {
  if (!schema_file.empty()) return load_schema(schema_file);
  return config_or_default(config_file).schema;
}

void check_all(std::span<const PathRecord> records,
               const SearchSpaceSchema& schema) {
  for (const PathRecord& r : records) {
    try {
      validate_encoding(r.encoding, schema);
    } catch (const ValidationError& e) {
      throw ValidationError("record " + r.id + ": " + e.what());
    }
  }
}

void write_file(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text(path, text);
  }
}

// Schema used by theorem-check when none is given: two blocks, small menus.
SearchSpaceSchema small_schema() {
  SearchSpaceSchema::Menus m;
  m.num_blocks = 2;
  m.dense_ops = {"FC", "SG", "Sum"};
  m.sparse_ops = {"EFC", "Att"};
  m.interactions = {"DP-on", "DP-off"};
  m.dense_dims = {16, 32, 64};
  m.sparse_dims = {16, 32};
  m.merger_toggles = {"off", "on"};
  return SearchSpaceSchema(m);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-shot architecture search with farthest greedy path sampling"};
  app.require_subcommand(1);

  // space validate
  auto* space = app.add_subcommand("space", "Search space utilities");
  space->require_subcommand(1);
  auto* space_validate =
      space->add_subcommand("validate", "Print L, cardinalities and max entropy");
  std::string space_file;
  space_validate->add_option("schema", space_file, "Schema or run config file")
      ->required();

  // pool
  auto* pool_cmd = app.add_subcommand(
      "pool", "Generate a skewed synthetic pool scored by the landscape");
  std::string pool_config, pool_out;
  std::size_t pool_size = 20000;
  double pool_skew = 1.0;
  std::uint64_t pool_seed = 0;
  bool pool_unscored = false;
  pool_cmd->add_option("--config", pool_config, "Run config (schema, landscape)");
  pool_cmd->add_option("--size", pool_size, "Pool size");
  pool_cmd->add_option("--skew", pool_skew, "Per-position skew; 0 is uniform");
  pool_cmd->add_option("--seed", pool_seed, "Seed");
  pool_cmd->add_flag("--unscored", pool_unscored, "Leave fitness empty");
  pool_cmd->add_option("--out", pool_out, "Output JSONL")->required();

  // entropy
  auto* entropy_cmd =
      app.add_subcommand("entropy", "Entropy and frequency table of a path set");
  std::string entropy_paths, entropy_schema, entropy_config;
  entropy_cmd->add_option("paths", entropy_paths, "Path set JSONL")->required();
  entropy_cmd->add_option("--schema", entropy_schema, "Schema file");
  entropy_cmd->add_option("--config", entropy_config, "Run config file");

  // theorem-check
  auto* theorem_cmd = app.add_subcommand(
      "theorem-check",
      "Compare the max-distance subset with the max-entropy subset");
  std::string theorem_schema, theorem_out;
  std::size_t theorem_pools = 100, theorem_pool_size = 12, theorem_r = 4;
  double theorem_tol = 0.05;
  std::uint64_t theorem_seed = 0;
  theorem_cmd->add_option("--schema", theorem_schema, "Schema file");
  theorem_cmd->add_option("--pools", theorem_pools, "Number of random pools");
  theorem_cmd->add_option("--pool-size", theorem_pool_size, "Paths per pool");
  theorem_cmd->add_option("--subset", theorem_r, "Subset size r");
  theorem_cmd->add_option("--tolerance", theorem_tol, "Allowed entropy shortfall");
  theorem_cmd->add_option("--seed", theorem_seed, "Seed");
  theorem_cmd->add_option("--out", theorem_out, "Output JSON (default stdout)");

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Select paths out of a pool");
  std::string sample_strategy = "fgps", sample_metric = "hamming";
  std::string sample_pool, sample_out, sample_trace, sample_config;
  std::uint64_t sample_seed = 0;
  std::size_t sample_initial = 0, sample_budget = 0, sample_retain = 0,
              sample_max = 0;
  double sample_filter = -1.0;
  bool sample_clock = false;
  sample_cmd->add_option("--strategy", sample_strategy)
      ->check(CLI::IsMember({"fgps", "random", "entropy-local", "entropy-global"}));
  sample_cmd->add_option("--metric", sample_metric)
      ->check(CLI::IsMember({"hamming", "euclidean"}));
  sample_cmd->add_option("--seed", sample_seed, "Seed");
  sample_cmd->add_option("--pool", sample_pool, "Pool JSONL")->required();
  sample_cmd->add_option("--out", sample_out, "Selected JSONL")->required();
  sample_cmd->add_option("--trace", sample_trace, "Trace CSV");
  sample_cmd->add_option("--config", sample_config, "Run config (fgps section)");
  sample_cmd->add_option("--initial", sample_initial, "Initial selected size");
  sample_cmd->add_option("--budget", sample_budget, "Candidates per iteration");
  sample_cmd->add_option("--retain", sample_retain, "Kept per iteration");
  sample_cmd->add_option("--max-selected", sample_max, "Target size");
  sample_cmd->add_option("--filter", sample_filter, "Bottom filter fraction");
  sample_cmd->add_flag("--wall-clock", sample_clock, "Record elapsed times");

  // surrogate eval
  auto* surrogate = app.add_subcommand("surrogate", "Simulator utilities");
  surrogate->require_subcommand(1);
  auto* surrogate_eval =
      surrogate->add_subcommand("eval", "True and proxy loss of paths (CSV)");
  std::string sur_config, sur_paths, sur_supernet, sur_out;
  std::uint64_t sur_seed = 0;
  surrogate_eval->add_option("--config", sur_config, "Run config");
  surrogate_eval->add_option("--paths", sur_paths, "Paths JSONL")->required();
  surrogate_eval->add_option("--supernet", sur_supernet,
                             "Supernet state JSON (default: untrained)");
  surrogate_eval->add_option("--seed", sur_seed, "Proxy noise seed");
  surrogate_eval->add_option("--out", sur_out, "Output CSV (default stdout)");

  // predictor train
  auto* predictor = app.add_subcommand("predictor", "Performance predictor");
  predictor->require_subcommand(1);
  auto* predictor_train = predictor->add_subcommand("train", "Fit the predictor");
  std::string pred_data, pred_out, pred_report, pred_config;
  predictor_train->add_option("--data", pred_data, "(path, loss) JSONL")
      ->required();
  predictor_train->add_option("--out", pred_out, "Model file")->required();
  predictor_train->add_option("--report", pred_report, "Metrics JSON");
  predictor_train->add_option("--config", pred_config, "Run config");

  // evolve
  auto* evolve_cmd = app.add_subcommand("evolve", "Regularized evolution");
  std::string evo_mode, evo_config, evo_out, evo_model, evo_supernet, evo_init;
  evolve_cmd->add_option("--mode", evo_mode)
      ->required()
      ->check(CLI::IsMember({"first-shot", "second-shot"}));
  evolve_cmd->add_option("--config", evo_config, "Run config");
  evolve_cmd->add_option("--out", evo_out, "Result JSONL")->required();
  evolve_cmd->add_option("--model", evo_model, "Predictor (first-shot)");
  evolve_cmd->add_option("--supernet", evo_supernet,
                         "Supernet state (second-shot)");
  evolve_cmd->add_option("--init", evo_init, "Initial population JSONL");

  // run / baseline
  std::string run_config, run_out;
  std::uint64_t run_seed = 0;
  bool run_clock = false, run_fresh = false, run_quiet = false;
  auto* run_cmd = app.add_subcommand("run", "Full two-shot pipeline");
  auto* base_cmd = app.add_subcommand("baseline", "One-shot comparison arm");
  for (CLI::App* c : {run_cmd, base_cmd}) {
    c->add_option("--config", run_config, "Run config");
    c->add_option("--seed", run_seed, "Master seed");
    c->add_option("--out", run_out, "Output directory")->required();
    c->add_flag("--wall-clock", run_clock, "Record stage durations");
    c->add_flag("--fresh", run_fresh, "Ignore existing stage outputs");
    c->add_flag("--quiet", run_quiet, "No progress lines");
  }

  // report
  auto* report_cmd = app.add_subcommand("report", "Compare one-shot and two-shot");
  std::string rep_one, rep_two, rep_out;
  std::size_t rep_min = 50;
  report_cmd->add_option("--one-shot", rep_one, "One-shot run directory")
      ->required();
  report_cmd->add_option("--two-shot", rep_two, "Two-shot run directory")
      ->required();
  report_cmd->add_option("--out", rep_out, "Report JSON (default stdout)");
  report_cmd->add_option("--min-pairs", rep_min, "Required (proxy, true) pairs");

  // export
  auto* export_cmd = app.add_subcommand("export", "Encoding matrix as CSV");
  std::string exp_paths, exp_schema, exp_config, exp_out;
  export_cmd->add_option("--paths", exp_paths, "Paths JSONL")->required();
  export_cmd->add_option("--schema", exp_schema, "Schema file");
  export_cmd->add_option("--config", exp_config, "Run config");
  export_cmd->add_option("--out", exp_out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (space_validate->parsed()) {
      const SearchSpaceSchema schema = load_schema(space_file);
      std::cout << "L " << schema.encoding_length() << "\n";
      std::cout << "cardinalities";
      for (int c : schema.cardinalities()) std::cout << ' ' << c;
      std::cout << "\nmax_entropy " << fmt(max_entropy(schema)) << "\n";
      std::cout << "space_size " << std::setprecision(6)
                << static_cast<double>(space_size(schema)) << "\n";
    } else if (pool_cmd->parsed()) {
      const RunConfig cfg = config_or_default(pool_config);
      const std::vector<Encoding> pool =
          synthetic_pool(cfg.schema, pool_size, pool_skew, pool_seed);
      std::vector<PathRecord> records = make_records(pool, "pool");
      if (!pool_unscored) {
        const Landscape landscape(cfg.schema, cfg.landscape);
        for (PathRecord& r : records) {
          r.fitness = landscape.true_loss(r.encoding);
          r.fitness_source = "true";
        }
      }
      save_path_records(pool_out, records);
    } else if (entropy_cmd->parsed()) {
      const SearchSpaceSchema schema =
          schema_from(entropy_schema, entropy_config);
      const std::vector<PathRecord> records = load_path_records(entropy_paths);
      check_all(records, schema);
      const PathSet set(encodings_of(records));
      std::cout << "entropy," << fmt(shannon_entropy(set)) << "\n";
      std::cout << "max_entropy," << fmt(max_entropy(schema)) << "\n";
      std::cout << "position,label,symbol,frequency\n";
      const auto table = set.frequency_table();
      for (std::size_t p = 0; p < table.size(); ++p) {
        for (const auto& [symbol, f] : table[p]) {
          std::cout << p << ',' << schema.position_labels()[p] << ',' << symbol
                    << ',' << fmt(f) << "\n";
        }
      }
    } else if (theorem_cmd->parsed()) {
      const SearchSpaceSchema schema =
          theorem_schema.empty() ? small_schema() : load_schema(theorem_schema);
      Rng rng(theorem_seed);
      json pools = json::array();
      double sum = 0.0, worst = 1.0;
      std::size_t passed = 0;
      for (std::size_t k = 0; k < theorem_pools; ++k) {
        std::vector<Encoding> members;
        for (std::size_t i = 0; i < theorem_pool_size; ++i) {
          members.push_back(encode(random_path(schema, rng), schema));
        }
        const TheoremReport rep =
            theorem_check(PathSet(members), theorem_r, theorem_tol);
        sum += rep.ratio;
        worst = std::min(worst, rep.ratio);
        passed += rep.pass;
        pools.push_back({{"pool", k},
                         {"subsets_enumerated", rep.subsets_enumerated},
                         {"distance_subset", rep.distance_subset},
                         {"distance_subset_sum", rep.distance_subset_sum},
                         {"distance_subset_entropy", rep.distance_subset_entropy},
                         {"entropy_subset", rep.entropy_subset},
                         {"max_subset_entropy", rep.max_subset_entropy},
                         {"ratio", rep.ratio},
                         {"pass", rep.pass}});
      }
      json out;
      out["pools"] = theorem_pools;
      out["pool_size"] = theorem_pool_size;
      out["subset_size"] = theorem_r;
      out["tolerance"] = theorem_tol;
      out["seed"] = theorem_seed;
      out["mean_ratio"] = theorem_pools ? sum / theorem_pools : 1.0;
      out["min_ratio"] = worst;
      out["passed"] = passed;
      out["reports"] = pools;
      write_file(theorem_out, out.dump(2) + "\n");
    } else if (sample_cmd->parsed()) {
      FgpsConfig fc = config_or_default(sample_config).fgps;
      fc.rng_seed = sample_seed;
      fc.metric = parse_metric(sample_metric);
      if (sample_initial) fc.initial_size = sample_initial;
      if (sample_budget) fc.candidate_budget = sample_budget;
      if (sample_retain) fc.retain_per_iter = sample_retain;
      if (sample_max) fc.max_selected = sample_max;
      if (sample_filter >= 0.0) fc.bottom_filter_fraction = sample_filter;
      const std::vector<PathRecord> records = load_path_records(sample_pool);
      const PathSet pool(encodings_of(records));
      std::vector<double> scores;
      for (const PathRecord& r : records) scores.push_back(r.fitness.value_or(0.0));
      SampleResult res;
      if (sample_strategy == "fgps") {
        res = fgps(pool, scores, fc);
      } else if (sample_strategy == "random") {
        res = random_sampler(pool, scores, fc);
      } else {
        res = entropy_greedy_sampler(pool, scores, fc,
                                     sample_strategy == "entropy-local"
                                         ? EntropyMode::kLocal
                                         : EntropyMode::kGlobal);
      }
      std::vector<PathRecord> chosen;
      for (std::size_t i = 0; i < res.selected_indices.size(); ++i) {
        PathRecord r = records[res.selected_indices[i]];
        r.id = "selected-" + std::to_string(i);
        r.stage = sample_strategy;
        chosen.push_back(std::move(r));
      }
      save_path_records(sample_out, chosen);
      if (!sample_trace.empty()) {
        std::ostringstream os;
        write_trace_csv(os, res.trace, sample_clock);
        write_text(sample_trace, os.str());
      }
      std::cerr << "selected " << res.selected.size() << " of "
                << res.filtered_pool_size << ", entropy "
                << fmt(shannon_entropy(res.selected)) << "\n";
    } else if (surrogate_eval->parsed()) {
      const RunConfig cfg = config_or_default(sur_config);
      const Landscape landscape(cfg.schema, cfg.landscape);
      const SupernetState state =
          sur_supernet.empty()
              ? SupernetState(cfg.schema, cfg.supernet)
              : supernet_from_json(read_text(sur_supernet), cfg.schema);
      const std::vector<PathRecord> records = load_path_records(sur_paths);
      check_all(records, cfg.schema);
      ProxyEvaluator proxy(landscape, state, cfg.fine_tune_steps, sur_seed);
      std::ostringstream os;
      os << "encoding_id,true_loss,proxy_loss\n";
      for (const PathRecord& r : records) {
        os << r.id << ',' << fmt(landscape.true_loss(r.encoding)) << ','
           << fmt(proxy(r.encoding)) << "\n";
      }
      write_file(sur_out, os.str());
    } else if (predictor_train->parsed()) {
      const RunConfig cfg = config_or_default(pred_config);
      const std::vector<PathRecord> records = load_path_records(pred_data);
      check_all(records, cfg.schema);
      const TrainedPredictor t = train_predictor(
          encodings_of(records), fitness_of(records), cfg.schema.cardinalities(),
          cfg.schema.fingerprint(), cfg.predictor);
      std::ostringstream bin;
      t.model.save(bin);
      write_text(pred_out, bin.str());
      json m;
      m["test_kendall_tau"] = t.metrics.test_kendall_tau;
      m["final_train_loss"] = t.metrics.final_train_loss;
      m["train_size"] = t.metrics.train_size;
      m["test_size"] = t.metrics.test_size;
      m["epoch_losses"] = t.metrics.epoch_losses;
      if (!pred_report.empty()) write_text(pred_report, m.dump(2) + "\n");
      std::cerr << "test kendall tau " << fmt(t.metrics.test_kendall_tau)
                << "\n";
    } else if (evolve_cmd->parsed()) {
      const RunConfig cfg = config_or_default(evo_config);
      const bool first = evo_mode == "first-shot";
      const EvolutionConfig& ec =
          first ? cfg.first_shot_evolution : cfg.second_shot_evolution;
      std::vector<Encoding> init;
      if (!evo_init.empty()) {
        const auto recs = load_path_records(evo_init);
        check_all(recs, cfg.schema);
        init = encodings_of(recs);
      }
      EvolutionResult result;
      std::string source;
      if (first) {
        if (evo_model.empty()) {
          throw ConfigError("first-shot evolution needs --model");
        }
        std::istringstream bin(read_text(evo_model));
        const PredictorModel model = PredictorModel::load(bin);
        if (model.schema_fingerprint() != cfg.schema.fingerprint()) {
          throw ConfigError("model was trained for a different schema");
        }
        source = "predictor";
        result = evolve(ec, cfg.schema,
                        [&](std::span<const Encoding> b) {
                          return model.predict(b);
                        },
                        init);
      } else {
        const Landscape landscape(cfg.schema, cfg.landscape);
        const SupernetState state =
            evo_supernet.empty()
                ? SupernetState(cfg.schema, cfg.supernet)
                : supernet_from_json(read_text(evo_supernet), cfg.schema);
        ProxyEvaluator proxy(landscape, state, cfg.fine_tune_steps,
                             derive_seed(ec.rng_seed, "proxy_noise"));
        source = "proxy";
        result = evolve(ec, cfg.schema,
                        [&](std::span<const Encoding> b) {
                          std::vector<double> f;
                          for (const Encoding& e : b) f.push_back(proxy(e));
                          return f;
                        },
                        init);
      }
      std::vector<PathRecord> out;
      for (std::size_t i = 0; i < result.all_evaluated.size(); ++i) {
        const EvaluatedPath& p = result.all_evaluated[i];
        PathRecord r;
        r.id = "evolve-" + std::to_string(i);
        r.encoding = p.encoding;
        r.stage = evo_mode;
        r.fitness_source = source;
        r.fitness = p.fitness;
        r.generation = p.generation;
        out.push_back(std::move(r));
      }
      save_path_records(evo_out, out);
    } else if (run_cmd->parsed() || base_cmd->parsed()) {
      RunConfig cfg = config_or_default(run_config);
      cfg.master_seed = run_seed;
      cfg.resolve_seeds();
      cfg.validate();
      PipelineOptions opt;
      opt.wall_clock = run_clock;
      opt.resume = !run_fresh;
      opt.log = run_quiet ? nullptr : &std::cerr;
      const ArmSummary s = run_cmd->parsed()
                               ? run_two_shot(cfg, run_out, opt)
                               : run_one_shot_baseline(cfg, run_out, opt);
      std::cout << "best_true_loss " << fmt(s.best_true_loss) << "\n";
      std::cout << "best_encoding " << s.best_encoding.to_string() << "\n";
    } else if (report_cmd->parsed()) {
      const RankingReport rep = ranking_report(
          load_candidates(rep_one), load_candidates(rep_two), rep_min);
      write_file(rep_out,
                 ranking_report_json(rep, (std::filesystem::path(rep_two) /
                                           "stage4_fgps_trace.csv")
                                              .string()));
    } else if (export_cmd->parsed()) {
      const SearchSpaceSchema schema = schema_from(exp_schema, exp_config);
      const std::vector<PathRecord> records = load_path_records(exp_paths);
      check_all(records, schema);
      if (records.empty()) throw ValidationError("no paths to export");
      std::ostringstream os;
      export_encodings(os, PathSet(encodings_of(records)), schema);
      write_file(exp_out, os.str());
    }
  } catch (const StageError& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return kExitStage;
  } catch (const FitnessError& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return kExitStage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
