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
#include <sstream>

#include "test_support.h"
#include "twoshot/metrics.h"
#include "twoshot/predictor.h"

namespace twoshot {
namespace {

// Targets are a fixed linear function of the one-hot encoding.
struct LinearData {
  std::vector<Encoding> x;
  std::vector<double> y;
};

LinearData linear_data(const SearchSpaceSchema& s, std::size_t n,
                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> w(s.encoding_length());
  for (std::size_t p = 0; p < w.size(); ++p) {
    for (int c = 0; c < s.cardinalities()[p]; ++c) w[p].push_back(rng.normal());
  }
  LinearData d;
  for (std::size_t i = 0; i < n; ++i) {
    d.x.push_back(encode(random_path(s, rng), s));
    double y = 0.0;
    for (std::size_t p = 0; p < w.size(); ++p) y += w[p][d.x.back()[p]];
    d.y.push_back(y);
  }
  return d;
}

TEST(PredictorTest, LearnsLinearTarget) {
  const SearchSpaceSchema s;
  const LinearData d = linear_data(s, 2000, 17);
  const TrainedPredictor t = train_predictor(d.x, d.y, s.cardinalities(),
                                             s.fingerprint(), PredictorConfig{});
  EXPECT_GE(t.metrics.test_kendall_tau, 0.8);
  EXPECT_EQ(t.metrics.train_size + t.metrics.test_size, 2000u);
  EXPECT_EQ(t.metrics.epoch_losses.size(), PredictorConfig{}.epochs);
  EXPECT_LT(t.metrics.epoch_losses.back(), t.metrics.epoch_losses.front());
  EXPECT_EQ(t.model.schema_fingerprint(), s.fingerprint());
}

TEST(PredictorTest, GradientMatchesFiniteDifferences) {
  const SearchSpaceSchema s = testing::two_block_schema();
  PredictorModel model(s.cardinalities(), 4, {6, 5}, s.fingerprint(), 3);
  Rng rng(4);
  std::vector<Encoding> batch;
  std::vector<double> targets;
  for (int i = 0; i < 10; ++i) {
    batch.push_back(encode(random_path(s, rng), s));
    targets.push_back(rng.normal());
  }
  std::vector<double> grad;
  model.loss_and_gradient(batch, targets, &grad);
  std::vector<double> theta = model.parameters();
  ASSERT_EQ(grad.size(), theta.size());
  ASSERT_EQ(theta.size(), model.parameter_count());
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double keep = theta[i];
    theta[i] = keep + h;
    model.set_parameters(theta);
    const double up = model.loss_and_gradient(batch, targets, nullptr);
    theta[i] = keep - h;
    model.set_parameters(theta);
    const double down = model.loss_and_gradient(batch, targets, nullptr);
    theta[i] = keep;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(numeric), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - grad[i]) / scale);
  }
  model.set_parameters(theta);
  EXPECT_LE(worst, 1e-4);
}

TEST(PredictorTest, SgdStepLowersLoss) {
  const SearchSpaceSchema s = testing::two_block_schema();
  PredictorModel model(s.cardinalities(), 4, {8}, s.fingerprint(), 5);
  const LinearData d = linear_data(s, 32, 6);
  const double before = model.loss_and_gradient(d.x, d.y, nullptr);
  EXPECT_DOUBLE_EQ(model.sgd_step(d.x, d.y, 0.01), before);
  EXPECT_LT(model.loss_and_gradient(d.x, d.y, nullptr), before);
}

TEST(PredictorTest, SerializationIsBitExact) {
  const SearchSpaceSchema s;
  const LinearData d = linear_data(s, 200, 7);
  PredictorConfig cfg;
  cfg.epochs = 3;
  const TrainedPredictor t =
      train_predictor(d.x, d.y, s.cardinalities(), s.fingerprint(), cfg);
  std::stringstream first;
  t.model.save(first);
  const PredictorModel back = PredictorModel::load(first);
  std::stringstream second;
  back.save(second);
  EXPECT_EQ(first.str(), second.str());
  EXPECT_EQ(back.parameters(), t.model.parameters());
  for (const Encoding& e : d.x) EXPECT_EQ(back.predict(e), t.model.predict(e));
  EXPECT_EQ(back.target_mean(), t.model.target_mean());
  EXPECT_EQ(back.hidden_layer_sizes(), t.model.hidden_layer_sizes());

  std::string bytes = first.str();
  bytes[0] ^= 0x5a;
  std::stringstream corrupt(bytes);
  EXPECT_THROW(PredictorModel::load(corrupt), ValidationError);
  std::stringstream truncated(first.str().substr(0, first.str().size() / 2));
  EXPECT_THROW(PredictorModel::load(truncated), ValidationError);
}

TEST(PredictorTest, TrainingIsDeterministic) {
  const SearchSpaceSchema s;
  const LinearData d = linear_data(s, 120, 8);
  PredictorConfig cfg;
  cfg.epochs = 2;
  const auto a = train_predictor(d.x, d.y, s.cardinalities(), s.fingerprint(), cfg);
  const auto b = train_predictor(d.x, d.y, s.cardinalities(), s.fingerprint(), cfg);
  EXPECT_EQ(a.model.parameters(), b.model.parameters());
  EXPECT_EQ(a.metrics.test_kendall_tau, b.metrics.test_kendall_tau);
  cfg.rng_seed = 1;
  const auto c = train_predictor(d.x, d.y, s.cardinalities(), s.fingerprint(), cfg);
  EXPECT_NE(a.model.parameters(), c.model.parameters());
}

TEST(PredictorTest, PredictionsOnLossScale) {
  const SearchSpaceSchema s;
  LinearData d = linear_data(s, 400, 9);
  for (double& y : d.y) y = 100.0 + 0.5 * y;
  PredictorConfig cfg;
  cfg.epochs = 10;
  const auto t = train_predictor(d.x, d.y, s.cardinalities(), s.fingerprint(), cfg);
  const auto pred = t.model.predict(d.x);
  double mean = 0.0, sq = 0.0;
  for (double y : d.y) mean += y;
  mean /= static_cast<double>(d.y.size());
  for (double y : d.y) sq += (y - mean) * (y - mean);
  const double sd = std::sqrt(sq / static_cast<double>(d.y.size()));
  // Normalization uses the training split only.
  EXPECT_NEAR(t.model.target_mean(), mean, 0.2 * sd);
  EXPECT_NEAR(t.model.target_std(), sd, 0.2 * sd);
  EXPECT_NEAR(t.model.predict_normalized(d.x[0]) * t.model.target_std() +
                  t.model.target_mean(),
              pred[0], 1e-9);
}

TEST(PredictorTest, RejectsBadData) {
  const SearchSpaceSchema s;
  const LinearData d = linear_data(s, 60, 10);
  const PredictorConfig cfg;
  const std::vector<Encoding> few(d.x.begin(), d.x.begin() + 49);
  const std::vector<double> few_y(d.y.begin(), d.y.begin() + 49);
  EXPECT_THROW(train_predictor(few, few_y, s.cardinalities(), 0, cfg),
               ValidationError);
  EXPECT_THROW(train_predictor(d.x, few_y, s.cardinalities(), 0, cfg),
               ValidationError);
  std::vector<double> flat(d.x.size(), 1.0);
  EXPECT_THROW(train_predictor(d.x, flat, s.cardinalities(), 0, cfg),
               ValidationError);
  std::vector<double> nan_y = d.y;
  nan_y[3] = std::nan("");
  EXPECT_THROW(train_predictor(d.x, nan_y, s.cardinalities(), 0, cfg),
               ValidationError);
  PredictorModel model(s.cardinalities(), 3, {4}, 0, 0);
  EXPECT_THROW(model.predict(Encoding{{0}}), ValidationError);
  Encoding bad = d.x[0];
  bad.tokens[s.intra_position(1)] = 9;
  EXPECT_THROW(model.predict(bad), ValidationError);
}

}  // namespace
}  // namespace twoshot
