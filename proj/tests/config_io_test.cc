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

#include <filesystem>
#include <sstream>

#include "test_support.h"
#include "twoshot/config.h"
#include "twoshot/io.h"

namespace twoshot {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("twoshot_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(ConfigTest, EmptyTextGivesDefaults) {
  const RunConfig cfg = parse_run_config("");
  EXPECT_EQ(emit_run_config(cfg), emit_run_config(RunConfig()));
  EXPECT_EQ(cfg.schema, SearchSpaceSchema());
}

TEST(ConfigTest, ShippedConfigsParse) {
  const fs::path dir = fs::path(TWOSHOT_SOURCE_DIR) / "configs";
  EXPECT_EQ(emit_run_config(load_run_config(dir / "default.yaml")),
            emit_run_config(RunConfig()));
  load_run_config(dir / "smoke.yaml").validate();
  EXPECT_EQ(load_schema(dir / "smoke.yaml"), SearchSpaceSchema());
}

TEST(ConfigTest, EmitParseRoundTrip) {
  RunConfig cfg = parse_run_config(R"(
master_seed: 42
schema:
  num_blocks: 3
  dense_dims: [16, 64]
supernet:
  coadaptation_strength: 2.5
  proxy_noise: 0.000123
fgps:
  metric: euclidean
  max_selected: 900
second_shot_evolution:
  generations: 17
  rng_seed: 5
final:
  top_k: 3
)");
  EXPECT_EQ(cfg.master_seed, 42u);
  EXPECT_EQ(cfg.schema.num_blocks(), 3);
  EXPECT_EQ(cfg.fgps.metric, DistanceMetric::kEuclidean);
  EXPECT_EQ(cfg.second_shot_evolution.rng_seed, 5u);
  EXPECT_EQ(cfg.supernet.proxy_noise, 0.000123);
  const std::string text = emit_run_config(cfg);
  const RunConfig back = parse_run_config(text);
  EXPECT_EQ(emit_run_config(back), text);
  EXPECT_EQ(back.supernet.coadaptation_strength, 2.5);
  EXPECT_EQ(back.top_k_final, 3u);
}

TEST(ConfigTest, DerivedSeedsAreIsolated) {
  RunConfig a = parse_run_config("master_seed: 1\n");
  RunConfig b = parse_run_config(
      "master_seed: 1\nfgps:\n  rng_seed: 999\n");
  EXPECT_EQ(b.fgps.rng_seed, 999u);
  EXPECT_EQ(a.seed_for("second_shot_evolution"),
            b.seed_for("second_shot_evolution"));
  EXPECT_EQ(a.seed_for("fgps"), derive_seed(1, "fgps"));
  EXPECT_EQ(a.first_shot_evolution.rng_seed,
            derive_seed(1, "first_shot_evolution"));
  a.master_seed = 2;
  a.resolve_seeds();
  EXPECT_EQ(a.fgps.rng_seed, derive_seed(2, "fgps"));
  b.master_seed = 2;
  b.resolve_seeds();
  EXPECT_EQ(b.fgps.rng_seed, 999u);
}

TEST(ConfigTest, SectionTextChangesOnlyWithSection) {
  const RunConfig a = parse_run_config("");
  const RunConfig b = parse_run_config("fgps:\n  max_selected: 1500\n");
  EXPECT_NE(emit_section(a, "fgps"), emit_section(b, "fgps"));
  EXPECT_EQ(emit_section(a, "supernet"), emit_section(b, "supernet"));
  EXPECT_THROW(emit_section(a, "nonsense"), ConfigError);
}

TEST(ConfigTest, SecondShotGain) {
  RunConfig cfg;
  EXPECT_EQ(cfg.second_shot_supernet().maturity_gain, 0.05);
  EXPECT_EQ(cfg.second_shot_supernet().coadaptation_strength,
            cfg.supernet.coadaptation_strength);
  cfg.second_shot_maturity_gain.reset();
  EXPECT_EQ(cfg.second_shot_supernet().maturity_gain,
            cfg.supernet.maturity_gain);
}

TEST(ConfigTest, Errors) {
  EXPECT_THROW(parse_run_config("bogus: 1\n"), ConfigError);
  EXPECT_THROW(parse_run_config("fgps:\n  retain: 3\n"), ConfigError);
  EXPECT_THROW(parse_run_config("fgps: [1, 2\n"), ConfigError);
  EXPECT_THROW(parse_run_config("fgps:\n  max_selected: -3\n"), ConfigError);
  EXPECT_THROW(parse_run_config("fgps:\n  metric: cosine\n"), ConfigError);
  EXPECT_THROW(parse_run_config("fgps:\n  retain_per_iter: 500\n"),
               ConfigError);
  EXPECT_THROW(parse_run_config("first_shot:\n  predictor_samples: 10\n"),
               ConfigError);
  EXPECT_THROW(
      parse_run_config("first_shot_evolution:\n  fitness_source: proxy\n"),
      ConfigError);
  EXPECT_THROW(parse_run_config("schema:\n  num_blocks: 0\n"), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/run.yaml"), ConfigError);
}

TEST(SchemaConfigTest, BareOrNested) {
  const std::string bare = "num_blocks: 2\nsparse_dims: [8]\n";
  const SearchSpaceSchema a = parse_schema(bare);
  const SearchSpaceSchema b = parse_schema("schema:\n  num_blocks: 2\n  sparse_dims: [8]\n");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.menus().sparse_dims, std::vector<int>{8});
  EXPECT_EQ(parse_schema(emit_schema(a)), a);
  EXPECT_EQ(parse_schema(emit_schema(SearchSpaceSchema())), SearchSpaceSchema());
}

TEST(PathRecordTest, JsonlRoundTrip) {
  const SearchSpaceSchema s;
  std::vector<PathRecord> recs = make_records(
      std::vector<Encoding>{encode(random_path(s, 1), s),
                            encode(random_path(s, 2), s)},
      "pool");
  recs[0].fitness = 0.1234567890123456789;
  recs[0].fitness_source = "true";
  recs[1].generation = 7;
  recs[1].true_loss = 1.0 / 3.0;
  std::stringstream ss;
  write_path_records(ss, recs);
  const auto back = read_path_records(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].id, "pool-0");
  EXPECT_EQ(back[0].encoding, recs[0].encoding);
  EXPECT_EQ(*back[0].fitness, *recs[0].fitness);
  EXPECT_FALSE(back[1].fitness.has_value());
  EXPECT_EQ(*back[1].generation, 7u);
  EXPECT_EQ(*back[1].true_loss, 1.0 / 3.0);
  std::stringstream again;
  write_path_records(again, back);
  std::stringstream first;
  write_path_records(first, recs);
  EXPECT_EQ(again.str(), first.str());
  EXPECT_THROW(fitness_of(back), ValidationError);
}

TEST(PathRecordTest, ErrorsNameTheLine) {
  std::stringstream ss("{\"tokens\":[1,0]}\n\n{\"tokens\":[1,\n");
  try {
    read_path_records(ss);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::stringstream bad_token("{\"tokens\":[1,300]}\n");
  EXPECT_THROW(read_path_records(bad_token), ValidationError);
  std::stringstream missing("{\"id\":\"x\"}\n");
  EXPECT_THROW(read_path_records(missing), ValidationError);
  EXPECT_THROW(load_path_records("/nonexistent/paths.jsonl"), ValidationError);
}

TEST(ExportTest, CsvRoundTrip) {
  const SearchSpaceSchema s;
  Rng rng(3);
  std::vector<Encoding> members;
  for (int i = 0; i < 25; ++i) members.push_back(encode(random_path(s, rng), s));
  std::stringstream ss;
  export_encodings(ss, PathSet(members), s);
  const PathSet back = import_encodings(ss, s);
  EXPECT_EQ(back.members(), members);

  std::stringstream other;
  export_encodings(other, PathSet(members), s);
  EXPECT_THROW(import_encodings(other, testing::two_block_schema()),
               ValidationError);
  std::string text = ss.str();
  std::stringstream invalid(text.substr(0, text.find('\n') + 1) + "1,2,x\n");
  EXPECT_THROW(import_encodings(invalid, s), ValidationError);
}

TEST(SupernetIoTest, JsonRoundTripIsExact) {
  const SearchSpaceSchema s;
  SupernetConfig c;
  c.maturity_gain = 0.0123;
  const std::vector<Encoding> stream{encode(random_path(s, 4), s),
                                     encode(random_path(s, 5), s)};
  const SupernetState st = train_supernet(SupernetState(s, c), stream, 77, 9);
  const std::string text = supernet_to_json(st);
  const SupernetState back = supernet_from_json(text, s);
  EXPECT_EQ(back.maturity_table(), st.maturity_table());
  EXPECT_EQ(back.train_step_count(), 77u);
  EXPECT_EQ(back.config().maturity_gain, 0.0123);
  EXPECT_EQ(supernet_to_json(back), text);
  EXPECT_THROW(supernet_from_json("{}", s), ValidationError);
  EXPECT_THROW(supernet_from_json(text, testing::two_block_schema()),
               ValidationError);
}

TEST(FileTest, AtomicWriteAndDigest) {
  const fs::path dir = scratch_dir("files");
  const fs::path f = dir / "nested" / "a.txt";
  write_text(f, "hello\n");
  EXPECT_EQ(read_text(f), "hello\n");
  EXPECT_FALSE(fs::exists(dir / "nested" / "a.txt.tmp"));
  EXPECT_EQ(file_digest(f), text_digest("hello\n"));
  EXPECT_EQ(text_digest("hello\n").size(), 16u);
  EXPECT_NE(text_digest("hello\n"), text_digest("hello"));
  EXPECT_THROW(read_text(dir / "missing"), ValidationError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace twoshot
