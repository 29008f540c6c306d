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

// End-to-end runs.
//
// Two-shot arm:
//   1. first_shot_supernet    train the supernet on random paths
//   2. predictor              proxy-evaluate random paths, fit the predictor
//   3. first_shot_evolution   evolve against the predictor -> pool
//   4. fgps                   farthest greedy paths out of the pool
//   5. second_shot_supernet   retrain the supernet on those paths
//   6. second_shot_evolution  evolve against the proxy, then evaluate the
//                             top candidates from scratch
//
// One-shot arm: stage 1, then evolution against the first-shot proxy and the
// same final evaluation.
//
// Every stage writes its files into the output directory and records them in
// manifest.json together with a key over its configuration sections and
// input files. A later run over the same directory skips stages whose key
// and outputs are unchanged.

#ifndef TWOSHOT_PIPELINE_H_
#define TWOSHOT_PIPELINE_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twoshot/config.h"
#include "twoshot/io.h"

namespace twoshot {

struct PipelineOptions {
  // Record stage durations in the manifest and traces. Off by default so
  // repeated runs produce identical files.
  bool wall_clock = false;
  // Reuse stages whose manifest entry still matches.
  bool resume = true;
  // Progress lines; null for silence.
  std::ostream* log = nullptr;
};

struct ArmSummary {
  std::string arm;
  Encoding best_encoding;
  double best_true_loss = 0.0;
  double best_proxy_loss = 0.0;
  // Correlation between proxy and true loss over the ranked candidates.
  double pearson = 0.0;
  double kendall = 0.0;
  std::size_t ranked_candidates = 0;
  // Two-shot arm only.
  std::optional<double> pool_entropy;
  std::optional<double> fgps_entropy;
  std::optional<double> random_subset_entropy;
  std::vector<std::string> reused_stages;
};

// Throw StageError on failure; files of completed stages are kept.
ArmSummary run_two_shot(const RunConfig& cfg,
                        const std::filesystem::path& out_dir,
                        const PipelineOptions& options = {});
ArmSummary run_one_shot_baseline(const RunConfig& cfg,
                                 const std::filesystem::path& out_dir,
                                 const PipelineOptions& options = {});

// Candidates of a finished arm (top_candidates.jsonl).
std::vector<PathRecord> load_candidates(const std::filesystem::path& arm_dir);

struct LossSummary {
  double min = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double std_dev = 0.0;
};

struct ArmRanking {
  std::size_t pairs = 0;
  double pearson = 0.0;
  double kendall = 0.0;
  LossSummary true_loss;
  Encoding best_encoding;
};

struct RankingReport {
  ArmRanking one_shot;
  ArmRanking two_shot;
  // two_shot minus one_shot.
  double delta_pearson = 0.0;
  double delta_kendall = 0.0;
  double delta_best_true_loss = 0.0;
  double delta_mean_true_loss = 0.0;
  double delta_median_true_loss = 0.0;
};

// Records need fitness (proxy) and true_loss. Throws ValidationError if
// either arm has fewer than `min_pairs` such records.
RankingReport ranking_report(std::span<const PathRecord> one_shot,
                             std::span<const PathRecord> two_shot,
                             std::size_t min_pairs = 50);
std::string ranking_report_json(const RankingReport& report,
                                const std::string& entropy_curve_file);

}  // namespace twoshot

#endif  // TWOSHOT_PIPELINE_H_
