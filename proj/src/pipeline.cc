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

#include "twoshot/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "twoshot/evolution.h"
#include "twoshot/metrics.h"
#include "twoshot/predictor.h"
#include "twoshot/sampling.h"
#include "twoshot/surrogate.h"

namespace twoshot {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kManifest[] = "manifest.json";
constexpr char kStage1Supernet[] = "stage1_supernet.json";
constexpr char kPredictorData[] = "stage2_predictor_data.jsonl";
constexpr char kPredictorModel[] = "stage2_predictor.bin";
constexpr char kPredictorMetrics[] = "stage2_predictor_metrics.json";
constexpr char kPool[] = "stage3_pool.jsonl";
constexpr char kFgpsPaths[] = "stage4_fgps.jsonl";
constexpr char kFgpsTrace[] = "stage4_fgps_trace.csv";
constexpr char kFgpsStats[] = "stage4_fgps_stats.json";
constexpr char kStage5Supernet[] = "stage5_supernet.json";
constexpr char kStage6Evolution[] = "stage6_evolution.jsonl";
constexpr char kOneShotEvolution[] = "one_shot_evolution.jsonl";
constexpr char kTopCandidates[] = "top_candidates.jsonl";
constexpr char kFinalCandidates[] = "final_candidates.jsonl";
constexpr char kSummary[] = "summary.json";

json finite_or_null(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

double safe_pearson(std::span<const double> a, std::span<const double> b) {
  try {
    return pearson_r(a, b);
  } catch (const ValidationError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double safe_kendall(std::span<const double> a, std::span<const double> b) {
  try {
    return kendall_tau(a, b);
  } catch (const ValidationError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// Executes stages against an output directory and keeps manifest.json.
class StageRunner {
 public:
  StageRunner(const RunConfig& cfg, fs::path dir, std::string arm,
              const PipelineOptions& options)
      : cfg_(cfg), dir_(std::move(dir)), options_(options) {
    fs::create_directories(dir_);
    const fs::path mpath = dir_ / kManifest;
    if (options_.resume && fs::exists(mpath)) {
      try {
        manifest_ = json::parse(read_text(mpath));
      } catch (const json::exception&) {
        manifest_ = json::object();
      }
      if (manifest_.value("arm", "") != arm) manifest_ = json::object();
    }
    if (!manifest_.is_object()) manifest_ = json::object();
    manifest_["arm"] = arm;
    manifest_["master_seed"] = cfg_.master_seed;
    if (!manifest_.contains("stages")) manifest_["stages"] = json::object();
    const std::string config_text = emit_run_config(cfg_);
    write_text(dir_ / "config.yaml", config_text);
    manifest_["config_digest"] = text_digest(config_text);
  }

  const fs::path& dir() const { return dir_; }
  fs::path path(const char* file) const { return dir_ / file; }
  const std::vector<std::string>& reused() const { return reused_; }

  // Runs `body` unless the stage can be reused. `body` writes `outputs`.
  void stage(const std::string& name, std::vector<std::string> sections,
             std::vector<std::string> inputs, std::vector<std::string> outputs,
             const std::function<void()>& body) {
    json section_digests = json::object();
    std::string key_text;
    for (const std::string& s : sections) {
      const std::string d = text_digest(emit_section(cfg_, s));
      section_digests[s] = d;
      key_text += s + "=" + d + ";";
    }
    json input_digests = json::object();
    for (const std::string& f : inputs) {
      const std::string d = file_digest(dir_ / f);
      input_digests[f] = d;
      key_text += f + "=" + d + ";";
    }
    const std::string key = text_digest(key_text);

    json& stages = manifest_["stages"];
    if (options_.resume && stages.contains(name) &&
        stages[name].value("key", "") == key && outputs_intact(stages[name])) {
      reused_.push_back(name);
      log("reused " + name);
      return;
    }
    stages.erase(name);
    log("running " + name);
    const auto start = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
    const double elapsed =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - start)
            .count();
    json entry;
    entry["key"] = key;
    entry["config_sections"] = section_digests;
    entry["inputs"] = input_digests;
    json out = json::object();
    for (const std::string& f : outputs) out[f] = file_digest(dir_ / f);
    entry["outputs"] = out;
    if (options_.wall_clock) entry["elapsed_ms"] = elapsed;
    stages[name] = entry;
    write_text(dir_ / kManifest, manifest_.dump(2) + "\n");
  }

  void log(const std::string& line) const {
    if (options_.log) *options_.log << "[" << dir_.filename().string() << "] "
                                    << line << std::endl;
  }

 private:
  bool outputs_intact(const json& entry) const {
    if (!entry.contains("outputs")) return false;
    for (const auto& [file, digest] : entry["outputs"].items()) {
      const fs::path p = dir_ / file;
      if (!fs::exists(p) || file_digest(p) != digest.get<std::string>()) {
        return false;
      }
    }
    return true;
  }

  const RunConfig& cfg_;
  fs::path dir_;
  const PipelineOptions& options_;
  json manifest_;
  std::vector<std::string> reused_;
};

std::vector<Encoding> random_encodings(const SearchSpaceSchema& schema,
                                       std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Encoding> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(encode(random_path(schema, rng), schema));
  }
  return out;
}

// `n` members drawn without replacement, cycling if the source is smaller.
std::vector<Encoding> sample_population(std::vector<Encoding> source,
                                        std::size_t n, std::uint64_t seed) {
  if (source.empty()) throw ValidationError("empty seed population");
  Rng rng(seed);
  for (std::size_t i = source.size(); i > 1; --i) {
    std::swap(source[i - 1], source[rng.uniform_index(i)]);
  }
  std::vector<Encoding> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(source[i % source.size()]);
  return out;
}

SupernetState load_supernet(const fs::path& file, const RunConfig& cfg) {
  return supernet_from_json(read_text(file), cfg.schema);
}

std::vector<PathRecord> evolution_records(const EvolutionResult& result,
                                          const std::string& stage,
                                          FitnessSource source) {
  std::vector<PathRecord> out;
  out.reserve(result.all_evaluated.size());
  for (std::size_t i = 0; i < result.all_evaluated.size(); ++i) {
    const EvaluatedPath& p = result.all_evaluated[i];
    PathRecord r;
    r.id = stage + "-" + std::to_string(i);
    r.encoding = p.encoding;
    r.stage = stage;
    r.fitness_source = fitness_source_name(source);
    r.fitness = p.fitness;
    r.generation = p.generation;
    out.push_back(std::move(r));
  }
  return out;
}

void stage_first_shot_supernet(const RunConfig& cfg, StageRunner& run) {
  run.stage("first_shot_supernet", {"schema", "supernet", "first_shot"}, {},
            {kStage1Supernet}, [&] {
              const std::uint64_t seed = cfg.seed_for("first_shot");
              const std::vector<Encoding> stream = random_encodings(
                  cfg.schema, cfg.first_shot_steps, derive_seed(seed, "stream"));
              const SupernetState state = train_supernet(
                  SupernetState(cfg.schema, cfg.supernet), stream,
                  cfg.first_shot_steps, derive_seed(seed, "train"));
              write_text(run.path(kStage1Supernet), supernet_to_json(state));
            });
}

// Evolution against a supernet's proxy, then from-scratch evaluation of the
// best candidates.
// Seeds the population from `seed_file` when given.
void evolve_and_finalize(const RunConfig& cfg, StageRunner& run,
                         const std::string& stage_name,
                         const char* supernet_file, const char* seed_file,
                         const char* evolution_file) {
  std::vector<std::string> inputs{supernet_file};
  if (seed_file) inputs.push_back(seed_file);
  run.stage(
      stage_name,
      {"schema", "landscape", "first_shot", "second_shot_evolution", "final"},
      inputs, {evolution_file, kTopCandidates, kFinalCandidates}, [&] {
        const SupernetState state = load_supernet(run.path(supernet_file), cfg);
        const Landscape landscape(cfg.schema, cfg.landscape);
        ProxyEvaluator proxy(
            landscape, state, cfg.fine_tune_steps,
            derive_seed(cfg.seed_for("second_shot_evolution"), "proxy_noise"));
        const FitnessFn fitness = [&](std::span<const Encoding> batch) {
          std::vector<double> f;
          f.reserve(batch.size());
          for (const Encoding& e : batch) f.push_back(proxy(e));
          return f;
        };
        std::vector<Encoding> initial;
        if (seed_file) {
          initial = sample_population(
              encodings_of(load_path_records(run.path(seed_file))),
              cfg.second_shot_evolution.population_size,
              derive_seed(cfg.second_shot_evolution.rng_seed, "initial"));
        }
        const EvolutionResult result =
            evolve(cfg.second_shot_evolution, cfg.schema, fitness, initial);
        save_path_records(run.path(evolution_file),
                          evolution_records(result, stage_name,
                                            FitnessSource::kProxy));

        const std::vector<EvaluatedPath> best =
            result.best_k(cfg.ranking_top_k);
        const std::uint64_t eval_seed =
            derive_seed(cfg.seed_for("final"), "evaluation");
        std::vector<PathRecord> top;
        for (std::size_t i = 0; i < best.size(); ++i) {
          PathRecord r;
          r.id = "candidate-" + std::to_string(i);
          r.encoding = best[i].encoding;
          r.stage = stage_name;
          r.fitness_source = "proxy";
          r.fitness = best[i].fitness;
          r.generation = best[i].generation;
          r.true_loss = landscape.observed_loss(best[i].encoding, eval_seed, i);
          top.push_back(std::move(r));
        }
        save_path_records(run.path(kTopCandidates), top);
        const std::size_t k = std::min(cfg.top_k_final, top.size());
        save_path_records(run.path(kFinalCandidates),
                          std::span<const PathRecord>(top).first(k));
      });
}

ArmSummary summarize(const RunConfig& cfg, StageRunner& run,
                     const std::string& arm) {
  const std::vector<PathRecord> top = load_path_records(run.path(kTopCandidates));
  if (top.empty()) throw StageError("summary", "no candidates");
  ArmSummary s;
  s.arm = arm;
  const std::size_t k = std::min(cfg.top_k_final, top.size());
  std::size_t best = 0;
  for (std::size_t i = 1; i < k; ++i) {
    if (*top[i].true_loss < *top[best].true_loss) best = i;
  }
  s.best_encoding = top[best].encoding;
  s.best_true_loss = *top[best].true_loss;
  s.best_proxy_loss = *top[best].fitness;
  std::vector<double> proxy, truth;
  for (const PathRecord& r : top) {
    proxy.push_back(*r.fitness);
    truth.push_back(*r.true_loss);
  }
  s.ranked_candidates = top.size();
  s.pearson = safe_pearson(proxy, truth);
  s.kendall = safe_kendall(proxy, truth);
  s.reused_stages = run.reused();
  return s;
}

void write_summary(const ArmSummary& s, StageRunner& run, bool two_shot) {
  json j;
  j["arm"] = s.arm;
  j["best_encoding"] = s.best_encoding.tokens;
  j["best_true_loss"] = s.best_true_loss;
  j["best_proxy_loss"] = s.best_proxy_loss;
  j["ranked_candidates"] = s.ranked_candidates;
  j[two_shot ? "pearson_two_shot" : "pearson_one_shot"] =
      finite_or_null(s.pearson);
  j[two_shot ? "kendall_two_shot" : "kendall_one_shot"] =
      finite_or_null(s.kendall);
  if (two_shot) {
    j["entropy_curve_file"] = kFgpsTrace;
    j["pool_entropy"] = *s.pool_entropy;
    j["fgps_entropy"] = *s.fgps_entropy;
    j["random_subset_entropy"] = *s.random_subset_entropy;
  }
  write_text(run.path(kSummary), j.dump(2) + "\n");
}

}  // namespace

ArmSummary run_two_shot(const RunConfig& cfg, const fs::path& out_dir,
                        const PipelineOptions& options) {
  cfg.validate();
  StageRunner run(cfg, out_dir, "two_shot", options);
  stage_first_shot_supernet(cfg, run);

  run.stage(
      "predictor", {"schema", "landscape", "first_shot", "predictor"},
      {kStage1Supernet}, {kPredictorData, kPredictorModel, kPredictorMetrics},
      [&] {
        const SupernetState state =
            load_supernet(run.path(kStage1Supernet), cfg);
        const Landscape landscape(cfg.schema, cfg.landscape);
        const std::uint64_t seed = cfg.seed_for("first_shot");
        const std::vector<Encoding> paths =
            random_encodings(cfg.schema, cfg.predictor_samples,
                             derive_seed(seed, "predictor_data"));
        ProxyEvaluator proxy(landscape, state, cfg.fine_tune_steps,
                             derive_seed(seed, "predictor_noise"));
        std::vector<PathRecord> records = make_records(paths, "predictor_data");
        std::vector<double> losses;
        for (PathRecord& r : records) {
          r.fitness = proxy(r.encoding);
          r.fitness_source = "proxy";
          losses.push_back(*r.fitness);
        }
        save_path_records(run.path(kPredictorData), records);
        const TrainedPredictor trained =
            train_predictor(paths, losses, cfg.schema.cardinalities(),
                            cfg.schema.fingerprint(), cfg.predictor);
        std::ostringstream bin;
        trained.model.save(bin);
        write_text(run.path(kPredictorModel), bin.str());
        json m;
        m["test_kendall_tau"] = finite_or_null(trained.metrics.test_kendall_tau);
        m["final_train_loss"] = trained.metrics.final_train_loss;
        m["train_size"] = trained.metrics.train_size;
        m["test_size"] = trained.metrics.test_size;
        m["epoch_losses"] = trained.metrics.epoch_losses;
        write_text(run.path(kPredictorMetrics), m.dump(2) + "\n");
      });

  run.stage("first_shot_evolution", {"schema", "first_shot_evolution"},
            {kPredictorModel}, {kPool}, [&] {
              std::istringstream bin(read_text(run.path(kPredictorModel)));
              const PredictorModel model = PredictorModel::load(bin);
              if (model.schema_fingerprint() != cfg.schema.fingerprint()) {
                throw ValidationError("predictor was trained on another schema");
              }
              const FitnessFn fitness = [&](std::span<const Encoding> batch) {
                return model.predict(batch);
              };
              const EvolutionResult result =
                  evolve(cfg.first_shot_evolution, cfg.schema, fitness);
              // The pool is what evolution produced: admitted children only.
              std::vector<PathRecord> pool = evolution_records(
                  result, "first_shot_evolution", FitnessSource::kPredictor);
              std::erase_if(pool, [](const PathRecord& r) {
                return *r.generation == 0;
              });
              save_path_records(run.path(kPool), pool);
            });

  run.stage(
      "fgps", {"schema", "fgps"}, {kPool},
      {kFgpsPaths, kFgpsTrace, kFgpsStats}, [&] {
        const std::vector<PathRecord> records =
            load_path_records(run.path(kPool));
        const PathSet pool(encodings_of(records));
        const std::vector<double> scores = fitness_of(records);
        const SampleResult sample = fgps(pool, scores, cfg.fgps);

        std::vector<PathRecord> chosen;
        chosen.reserve(sample.selected_indices.size());
        for (std::size_t i = 0; i < sample.selected_indices.size(); ++i) {
          PathRecord r = records[sample.selected_indices[i]];
          r.id = "fgps-" + std::to_string(i);
          r.stage = "fgps";
          chosen.push_back(std::move(r));
        }
        save_path_records(run.path(kFgpsPaths), chosen);
        std::ostringstream trace;
        write_trace_csv(trace, sample.trace, options.wall_clock);
        write_text(run.path(kFgpsTrace), trace.str());

        std::vector<Encoding> filtered;
        for (std::size_t i :
             filter_pool(pool, scores, cfg.fgps.bottom_filter_fraction)) {
          filtered.push_back(pool[i]);
        }
        const double h_fgps = shannon_entropy(sample.selected);
        const double h_random = random_subset_entropy(
            PathSet(std::move(filtered)), sample.selected.size(),
            derive_seed(cfg.fgps.rng_seed, "random_subset"));
        json stats;
        stats["pool_size"] = pool.size();
        stats["filtered_pool_size"] = sample.filtered_pool_size;
        stats["selected"] = sample.selected.size();
        stats["pool_entropy"] = shannon_entropy(pool);
        stats["fgps_entropy"] = h_fgps;
        stats["random_subset_entropy"] = h_random;
        stats["max_entropy"] = max_entropy(cfg.schema);
        write_text(run.path(kFgpsStats), stats.dump(2) + "\n");
        if (h_fgps < h_random) {
          throw StageError("fgps", "selected entropy " + std::to_string(h_fgps) +
                                       " below random subset entropy " +
                                       std::to_string(h_random));
        }
      });

  run.stage("second_shot_supernet", {"schema", "supernet", "second_shot"},
            {kFgpsPaths}, {kStage5Supernet}, [&] {
              const std::vector<Encoding> stream =
                  encodings_of(load_path_records(run.path(kFgpsPaths)));
              const SupernetState state = train_supernet(
                  SupernetState(cfg.schema, cfg.second_shot_supernet()), stream,
                  cfg.second_shot_steps,
                  derive_seed(cfg.seed_for("second_shot"), "train"));
              write_text(run.path(kStage5Supernet), supernet_to_json(state));
            });

  evolve_and_finalize(cfg, run, "second_shot_evolution", kStage5Supernet,
                      kFgpsPaths, kStage6Evolution);

  ArmSummary s = summarize(cfg, run, "two_shot");
  const json stats = json::parse(read_text(run.path(kFgpsStats)));
  s.pool_entropy = stats.at("pool_entropy").get<double>();
  s.fgps_entropy = stats.at("fgps_entropy").get<double>();
  s.random_subset_entropy = stats.at("random_subset_entropy").get<double>();
  write_summary(s, run, true);
  run.log("best true loss " + std::to_string(s.best_true_loss));
  return s;
}

ArmSummary run_one_shot_baseline(const RunConfig& cfg, const fs::path& out_dir,
                                 const PipelineOptions& options) {
  cfg.validate();
  StageRunner run(cfg, out_dir, "one_shot", options);
  stage_first_shot_supernet(cfg, run);
  evolve_and_finalize(cfg, run, "one_shot_evolution", kStage1Supernet,
                      nullptr, kOneShotEvolution);
  ArmSummary s = summarize(cfg, run, "one_shot");
  write_summary(s, run, false);
  run.log("best true loss " + std::to_string(s.best_true_loss));
  return s;
}

std::vector<PathRecord> load_candidates(const fs::path& arm_dir) {
  return load_path_records(arm_dir / kTopCandidates);
}

namespace {

ArmRanking rank_arm(std::span<const PathRecord> records, std::size_t min_pairs,
                    const char* arm) {
  std::vector<double> proxy, truth;
  std::vector<const PathRecord*> used;
  for (const PathRecord& r : records) {
    if (!r.fitness || !r.true_loss) continue;
    proxy.push_back(*r.fitness);
    truth.push_back(*r.true_loss);
    used.push_back(&r);
  }
  if (truth.size() < min_pairs || truth.size() < 2) {
    throw ValidationError(std::string(arm) + " arm has " +
                          std::to_string(truth.size()) +
                          " (proxy, true) pairs, need " +
                          std::to_string(std::max<std::size_t>(min_pairs, 2)));
  }
  ArmRanking a;
  a.pairs = truth.size();
  a.pearson = safe_pearson(proxy, truth);
  a.kendall = safe_kendall(proxy, truth);
  std::vector<double> sorted = truth;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  double sum = 0.0;
  for (double v : truth) sum += v;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : truth) ss += (v - mean) * (v - mean);
  a.true_loss.min = sorted.front();
  a.true_loss.max = sorted.back();
  a.true_loss.mean = mean;
  a.true_loss.median = n % 2 ? sorted[n / 2]
                             : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  a.true_loss.std_dev = std::sqrt(ss / static_cast<double>(n));
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (truth[i] < truth[best]) best = i;
  }
  a.best_encoding = used[best]->encoding;
  return a;
}

json arm_json(const ArmRanking& a) {
  return {{"pairs", a.pairs},
          {"pearson", finite_or_null(a.pearson)},
          {"kendall", finite_or_null(a.kendall)},
          {"best_encoding", a.best_encoding.tokens},
          {"true_loss",
           {{"min", a.true_loss.min},
            {"mean", a.true_loss.mean},
            {"median", a.true_loss.median},
            {"max", a.true_loss.max},
            {"std", a.true_loss.std_dev}}}};
}

}  // namespace

RankingReport ranking_report(std::span<const PathRecord> one_shot,
                             std::span<const PathRecord> two_shot,
                             std::size_t min_pairs) {
  RankingReport r;
  r.one_shot = rank_arm(one_shot, min_pairs, "one-shot");
  r.two_shot = rank_arm(two_shot, min_pairs, "two-shot");
  r.delta_pearson = r.two_shot.pearson - r.one_shot.pearson;
  r.delta_kendall = r.two_shot.kendall - r.one_shot.kendall;
  r.delta_best_true_loss = r.two_shot.true_loss.min - r.one_shot.true_loss.min;
  r.delta_mean_true_loss = r.two_shot.true_loss.mean - r.one_shot.true_loss.mean;
  r.delta_median_true_loss =
      r.two_shot.true_loss.median - r.one_shot.true_loss.median;
  return r;
}

std::string ranking_report_json(const RankingReport& report,
                                const std::string& entropy_curve_file) {
  json j;
  j["best_encoding"] = report.two_shot.best_encoding.tokens;
  j["best_true_loss"] = report.two_shot.true_loss.min;
  j["pearson_one_shot"] = finite_or_null(report.one_shot.pearson);
  j["pearson_two_shot"] = finite_or_null(report.two_shot.pearson);
  j["entropy_curve_file"] = entropy_curve_file;
  j["one_shot"] = arm_json(report.one_shot);
  j["two_shot"] = arm_json(report.two_shot);
  j["delta"] = {{"pearson", finite_or_null(report.delta_pearson)},
                {"kendall", finite_or_null(report.delta_kendall)},
                {"best_true_loss", report.delta_best_true_loss},
                {"mean_true_loss", report.delta_mean_true_loss},
                {"median_true_loss", report.delta_median_true_loss}};
  return j.dump(2) + "\n";
}

}  // namespace twoshot
