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

// Encoding -> loss regressor: a lookup-table embedding per position, the
// embeddings concatenated and fed through a ReLU perceptron with a single
// linear output. Targets are z-normalized during training and predictions
// are mapped back to the loss scale.

#ifndef TWOSHOT_PREDICTOR_H_
#define TWOSHOT_PREDICTOR_H_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "twoshot/search_space.h"

namespace twoshot {

struct PredictorConfig {
  std::size_t embedding_dim = 15;
  std::vector<std::size_t> hidden_layer_sizes{64, 32};
  double learning_rate = 0.05;
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  // Fraction of pairs used for fitting; the rest measure Kendall's tau.
  double train_fraction = 0.8;
  // Refit on every pair after measuring the held-out tau.
  bool refit_on_full_data = false;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

class PredictorModel {
 public:
  // Randomly initialized model for encodings with the given per-position
  // cardinalities.
  PredictorModel(std::vector<int> cardinalities, std::size_t embedding_dim,
                 std::vector<std::size_t> hidden_layer_sizes,
                 std::uint64_t schema_fingerprint, std::uint64_t seed);

  std::size_t encoding_length() const { return cardinalities_.size(); }
  std::size_t embedding_dim() const { return embedding_dim_; }
  const std::vector<int>& cardinalities() const { return cardinalities_; }
  const std::vector<std::size_t>& hidden_layer_sizes() const { return hidden_; }
  std::uint64_t schema_fingerprint() const { return schema_fingerprint_; }
  double target_mean() const { return target_mean_; }
  double target_std() const { return target_std_; }
  void set_normalization(double mean, double std_dev);

  // Loss-scale prediction. Throws ValidationError on length mismatch or
  // out-of-range tokens.
  double predict(const Encoding& e) const;
  std::vector<double> predict(std::span<const Encoding> batch) const;
  // Prediction in normalized units.
  double predict_normalized(const Encoding& e) const;

  // Flat view of every parameter: embedding tables, then per layer the
  // weight matrix (row-major, inputs x outputs) and the bias.
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  // Mean squared error against normalized targets; fills `gradient` (flat
  // layout as above) when non-null.
  double loss_and_gradient(std::span<const Encoding> batch,
                           std::span<const double> normalized_targets,
                           std::vector<double>* gradient) const;

  // Plain gradient step on one batch; returns the pre-step loss.
  double sgd_step(std::span<const Encoding> batch,
                  std::span<const double> normalized_targets,
                  double learning_rate);

  // Versioned little-endian binary format.
  void save(std::ostream& os) const;
  static PredictorModel load(std::istream& is);

 private:
  PredictorModel() = default;

  struct Gradients {
    Eigen::MatrixXd embedding;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
  };

  void check_encoding(const Encoding& e) const;
  double compute_loss(std::span<const Encoding> batch,
                      std::span<const double> targets, Gradients* grads) const;
  void refresh_projection();

  std::vector<int> cardinalities_;
  std::vector<std::size_t> row_offset_;
  std::size_t embedding_dim_ = 0;
  std::vector<std::size_t> hidden_;
  std::uint64_t schema_fingerprint_ = 0;
  double target_mean_ = 0.0;
  double target_std_ = 1.0;

  Eigen::MatrixXd embedding_;  // sum(c_pos) x embedding_dim
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  // Embedding rows pushed through the first layer: sum(c_pos) x hidden[0].
  Eigen::MatrixXd projection_;
};

struct PredictorMetrics {
  double test_kendall_tau = 0.0;
  double final_train_loss = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<double> epoch_losses;
};

struct TrainedPredictor {
  PredictorModel model;
  PredictorMetrics metrics;
};

// Throws ValidationError for fewer than 50 pairs, inconsistent lengths,
// non-finite targets or zero target variance.
TrainedPredictor train_predictor(std::span<const Encoding> encodings,
                                 std::span<const double> losses,
                                 const std::vector<int>& cardinalities,
                                 std::uint64_t schema_fingerprint,
                                 const PredictorConfig& cfg);

}  // namespace twoshot

#endif  // TWOSHOT_PREDICTOR_H_
