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

#include "twoshot/predictor.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

#include "twoshot/metrics.h"

namespace twoshot {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'P', 'R', 'E', 'D', '\0', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), 8);
}

void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t get_bytes(std::istream& is, int n) {
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), n);
  if (!is) throw ValidationError("predictor file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& is) {
  return static_cast<std::uint32_t>(get_bytes(is, 4));
}
std::uint64_t get_u64(std::istream& is) { return get_bytes(is, 8); }
double get_f64(std::istream& is) {
  const double v = std::bit_cast<double>(get_u64(is));
  if (!std::isfinite(v)) throw ValidationError("predictor file holds non-finite value");
  return v;
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

void PredictorConfig::validate() const {
  if (embedding_dim < 1) throw ValidationError("predictor: embedding_dim must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("predictor: train_fraction must be in (0, 1)");
  }
  if (batch_size < 1) throw ValidationError("predictor: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("predictor: learning_rate must be > 0");
  for (std::size_t h : hidden_layer_sizes) {
    if (h < 1) throw ValidationError("predictor: hidden layer sizes must be >= 1");
  }
}

PredictorModel::PredictorModel(std::vector<int> cardinalities,
                               std::size_t embedding_dim,
                               std::vector<std::size_t> hidden_layer_sizes,
                               std::uint64_t schema_fingerprint,
                               std::uint64_t seed)
    : cardinalities_(std::move(cardinalities)),
      embedding_dim_(embedding_dim),
      hidden_(std::move(hidden_layer_sizes)),
      schema_fingerprint_(schema_fingerprint) {
  if (cardinalities_.empty()) throw ValidationError("predictor: empty encoding");
  if (embedding_dim_ < 1) throw ValidationError("predictor: embedding_dim must be >= 1");
  std::size_t rows = 0;
  for (int c : cardinalities_) {
    if (c < 1) throw ValidationError("predictor: cardinality must be >= 1");
    row_offset_.push_back(rows);
    rows += static_cast<std::size_t>(c);
  }
  Rng rng(seed);
  embedding_.resize(static_cast<Eigen::Index>(rows),
                    static_cast<Eigen::Index>(embedding_dim_));
  for (Eigen::Index i = 0; i < embedding_.size(); ++i) {
    embedding_.data()[i] = 0.1 * rng.normal();
  }
  std::size_t fan_in = cardinalities_.size() * embedding_dim_;
  std::vector<std::size_t> outs = hidden_;
  outs.push_back(1);
  for (std::size_t fan_out : outs) {
    Eigen::MatrixXd w(static_cast<Eigen::Index>(fan_in),
                      static_cast<Eigen::Index>(fan_out));
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.normal();
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fan_out)));
    fan_in = fan_out;
  }
  refresh_projection();
}

void PredictorModel::set_normalization(double mean, double std_dev) {
  if (!std::isfinite(mean) || !(std_dev > 0.0) || !std::isfinite(std_dev)) {
    throw ValidationError("predictor: invalid normalization constants");
  }
  target_mean_ = mean;
  target_std_ = std_dev;
}

void PredictorModel::refresh_projection() {
  const Eigen::MatrixXd& w1 = weights_.front();
  projection_.resize(embedding_.rows(), w1.cols());
  const auto d = static_cast<Eigen::Index>(embedding_dim_);
  for (std::size_t p = 0; p < cardinalities_.size(); ++p) {
    const auto r0 = static_cast<Eigen::Index>(row_offset_[p]);
    const auto c = static_cast<Eigen::Index>(cardinalities_[p]);
    projection_.middleRows(r0, c).noalias() =
        embedding_.middleRows(r0, c) *
        w1.middleRows(static_cast<Eigen::Index>(p) * d, d);
  }
}

void PredictorModel::check_encoding(const Encoding& e) const {
  if (e.size() != cardinalities_.size()) {
    throw ValidationError("predictor: encoding length " +
                          std::to_string(e.size()) + " but model expects " +
                          std::to_string(cardinalities_.size()));
  }
  for (std::size_t p = 0; p < e.size(); ++p) {
    if (e[p] >= cardinalities_[p]) {
      throw ValidationError("predictor: token out of range at position " +
                            std::to_string(p));
    }
  }
}

double PredictorModel::predict_normalized(const Encoding& e) const {
  check_encoding(e);
  // First layer through the projection table, then explicit loops; the
  // summation order is fixed so single and batched calls agree exactly.
  const Eigen::Index h1 = projection_.cols();
  std::vector<double> act(static_cast<std::size_t>(h1));
  for (Eigen::Index k = 0; k < h1; ++k) act[k] = biases_.front()[k];
  for (std::size_t p = 0; p < e.size(); ++p) {
    const auto row = static_cast<Eigen::Index>(row_offset_[p] + e[p]);
    for (Eigen::Index k = 0; k < h1; ++k) act[k] += projection_(row, k);
  }
  for (std::size_t l = 1; l < weights_.size(); ++l) {
    for (double& a : act) a = relu(a);
    const Eigen::MatrixXd& w = weights_[l];
    std::vector<double> next(static_cast<std::size_t>(w.cols()));
    for (Eigen::Index o = 0; o < w.cols(); ++o) {
      double s = biases_[l][o];
      for (Eigen::Index i = 0; i < w.rows(); ++i) s += act[i] * w(i, o);
      next[o] = s;
    }
    act = std::move(next);
  }
  return act[0];
}

double PredictorModel::predict(const Encoding& e) const {
  return predict_normalized(e) * target_std_ + target_mean_;
}

std::vector<double> PredictorModel::predict(
    std::span<const Encoding> batch) const {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const Encoding& e : batch) out.push_back(predict(e));
  return out;
}

std::size_t PredictorModel::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(embedding_.size());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

std::vector<double> PredictorModel::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (Eigen::Index r = 0; r < embedding_.rows(); ++r) {
    for (Eigen::Index c = 0; c < embedding_.cols(); ++c) {
      flat.push_back(embedding_(r, c));
    }
  }
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Eigen::MatrixXd& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    }
    for (Eigen::Index i = 0; i < biases_[l].size(); ++i) {
      flat.push_back(biases_[l][i]);
    }
  }
  return flat;
}

void PredictorModel::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw ValidationError("predictor: parameter vector has the wrong size");
  }
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < embedding_.rows(); ++r) {
    for (Eigen::Index c = 0; c < embedding_.cols(); ++c) {
      embedding_(r, c) = flat[k++];
    }
  }
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[k++];
    }
    for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l][i] = flat[k++];
  }
  refresh_projection();
}

double PredictorModel::compute_loss(std::span<const Encoding> batch,
                                    std::span<const double> targets,
                                    Gradients* grads) const {
  if (batch.size() != targets.size() || batch.empty()) {
    throw ValidationError("predictor: batch and targets must be non-empty and equal length");
  }
  for (const Encoding& e : batch) check_encoding(e);
  const auto b = static_cast<Eigen::Index>(batch.size());
  const auto d = static_cast<Eigen::Index>(embedding_dim_);
  const auto len = static_cast<Eigen::Index>(cardinalities_.size());

  Eigen::MatrixXd x0(b, len * d);
  for (Eigen::Index i = 0; i < b; ++i) {
    const Encoding& e = batch[static_cast<std::size_t>(i)];
    for (Eigen::Index p = 0; p < len; ++p) {
      const auto row = static_cast<Eigen::Index>(
          row_offset_[static_cast<std::size_t>(p)] + e[static_cast<std::size_t>(p)]);
      x0.block(i, p * d, 1, d) = embedding_.row(row);
    }
  }

  // pre[l] = input[l] * W_l + b_l, input[l + 1] = relu(pre[l]).
  std::vector<Eigen::MatrixXd> inputs{x0};
  std::vector<Eigen::MatrixXd> pre;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = inputs.back() * weights_[l];
    z.rowwise() += biases_[l].transpose();
    pre.push_back(z);
    if (l + 1 < weights_.size()) inputs.push_back(z.cwiseMax(0.0));
  }
  Eigen::VectorXd target(b);
  for (Eigen::Index i = 0; i < b; ++i) target[i] = targets[static_cast<std::size_t>(i)];
  const Eigen::VectorXd residual = pre.back().col(0) - target;
  const double loss = residual.squaredNorm() / static_cast<double>(b);
  if (!grads) return loss;

  grads->weights.resize(weights_.size());
  grads->biases.resize(weights_.size());
  Eigen::MatrixXd dz = (2.0 / static_cast<double>(b)) * residual;
  for (std::size_t l = weights_.size(); l-- > 0;) {
    grads->weights[l].noalias() = inputs[l].transpose() * dz;
    grads->biases[l] = dz.colwise().sum().transpose();
    Eigen::MatrixXd da = dz * weights_[l].transpose();
    if (l > 0) {
      dz = da.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    } else {
      grads->embedding = Eigen::MatrixXd::Zero(embedding_.rows(), embedding_.cols());
      for (Eigen::Index i = 0; i < b; ++i) {
        const Encoding& e = batch[static_cast<std::size_t>(i)];
        for (Eigen::Index p = 0; p < len; ++p) {
          const auto row = static_cast<Eigen::Index>(
              row_offset_[static_cast<std::size_t>(p)] + e[static_cast<std::size_t>(p)]);
          grads->embedding.row(row) += da.block(i, p * d, 1, d);
        }
      }
    }
  }
  return loss;
}

double PredictorModel::loss_and_gradient(
    std::span<const Encoding> batch, std::span<const double> normalized_targets,
    std::vector<double>* gradient) const {
  if (!gradient) return compute_loss(batch, normalized_targets, nullptr);
  Gradients g;
  const double loss = compute_loss(batch, normalized_targets, &g);
  gradient->clear();
  gradient->reserve(parameter_count());
  for (Eigen::Index r = 0; r < g.embedding.rows(); ++r) {
    for (Eigen::Index c = 0; c < g.embedding.cols(); ++c) {
      gradient->push_back(g.embedding(r, c));
    }
  }
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < g.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < g.weights[l].cols(); ++c) {
        gradient->push_back(g.weights[l](r, c));
      }
    }
    for (Eigen::Index i = 0; i < g.biases[l].size(); ++i) {
      gradient->push_back(g.biases[l][i]);
    }
  }
  return loss;
}

double PredictorModel::sgd_step(std::span<const Encoding> batch,
                                std::span<const double> normalized_targets,
                                double learning_rate) {
  Gradients g;
  const double loss = compute_loss(batch, normalized_targets, &g);
  embedding_ -= learning_rate * g.embedding;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    weights_[l] -= learning_rate * g.weights[l];
    biases_[l] -= learning_rate * g.biases[l];
  }
  refresh_projection();
  return loss;
}

void PredictorModel::save(std::ostream& os) const {
  os.write(kMagic, sizeof(kMagic));
  put_u32(os, kFormatVersion);
  put_u64(os, schema_fingerprint_);
  put_u32(os, static_cast<std::uint32_t>(cardinalities_.size()));
  for (int c : cardinalities_) put_u32(os, static_cast<std::uint32_t>(c));
  put_u32(os, static_cast<std::uint32_t>(embedding_dim_));
  put_u32(os, static_cast<std::uint32_t>(hidden_.size()));
  for (std::size_t h : hidden_) put_u32(os, static_cast<std::uint32_t>(h));
  put_f64(os, target_mean_);
  put_f64(os, target_std_);
  for (double v : parameters()) put_f64(os, v);
}

PredictorModel PredictorModel::load(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError("not a predictor model file");
  }
  const std::uint32_t version = get_u32(is);
  if (version != kFormatVersion) {
    throw ValidationError("unsupported predictor format version " +
                          std::to_string(version));
  }
  const std::uint64_t fingerprint = get_u64(is);
  const std::uint32_t len = get_u32(is);
  if (len == 0 || len > 1'000'000) throw ValidationError("predictor file: bad encoding length");
  std::vector<int> card(len);
  for (int& c : card) {
    c = static_cast<int>(get_u32(is));
    if (c < 1 || c > 255) throw ValidationError("predictor file: bad cardinality");
  }
  const std::uint32_t dim = get_u32(is);
  const std::uint32_t layers = get_u32(is);
  if (dim == 0 || dim > 4096 || layers > 64) {
    throw ValidationError("predictor file: bad layer shapes");
  }
  std::vector<std::size_t> hidden(layers);
  for (std::size_t& h : hidden) {
    h = get_u32(is);
    if (h == 0 || h > 65536) throw ValidationError("predictor file: bad layer width");
  }
  PredictorModel m(card, dim, hidden, fingerprint, 0);
  const double mean = get_f64(is);
  const double sd = get_f64(is);
  m.set_normalization(mean, sd);
  std::vector<double> flat(m.parameter_count());
  for (double& v : flat) v = get_f64(is);
  m.set_parameters(flat);
  return m;
}

TrainedPredictor train_predictor(std::span<const Encoding> encodings,
                                 std::span<const double> losses,
                                 const std::vector<int>& cardinalities,
                                 std::uint64_t schema_fingerprint,
                                 const PredictorConfig& cfg) {
  cfg.validate();
  if (encodings.size() != losses.size()) {
    throw ValidationError("predictor: encodings and losses differ in length");
  }
  if (encodings.size() < 50) {
    throw ValidationError("predictor: need at least 50 pairs, got " +
                          std::to_string(encodings.size()));
  }
  for (const Encoding& e : encodings) {
    if (e.size() != cardinalities.size()) {
      throw ValidationError("predictor: inconsistent encoding length");
    }
  }
  for (double y : losses) {
    if (!std::isfinite(y)) throw ValidationError("predictor: non-finite target");
  }

  Rng rng(cfg.rng_seed);
  std::vector<std::size_t> order(encodings.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.train_fraction *
                                            static_cast<double>(order.size()))),
      2, order.size() - 2);

  auto fit = [&](const std::vector<std::size_t>& rows, std::uint64_t seed,
                 PredictorMetrics& metrics) {
    double mean = 0.0;
    for (std::size_t i : rows) mean += losses[i];
    mean /= static_cast<double>(rows.size());
    double var = 0.0;
    for (std::size_t i : rows) var += (losses[i] - mean) * (losses[i] - mean);
    var /= static_cast<double>(rows.size());
    if (!(var > 0.0)) {
      throw ValidationError("predictor: targets have zero variance");
    }
    PredictorModel model(cardinalities, cfg.embedding_dim,
                         cfg.hidden_layer_sizes, schema_fingerprint, seed);
    model.set_normalization(mean, std::sqrt(var));
    Rng shuffle_rng(mix64(seed));
    std::vector<std::size_t> perm = rows;
    std::vector<Encoding> xb;
    std::vector<double> zb;
    metrics.epoch_losses.clear();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (std::size_t i = perm.size(); i > 1; --i) {
        std::swap(perm[i - 1], perm[shuffle_rng.uniform_index(i)]);
      }
      double total = 0.0;
      for (std::size_t s = 0; s < perm.size(); s += cfg.batch_size) {
        const std::size_t e = std::min(perm.size(), s + cfg.batch_size);
        xb.clear();
        zb.clear();
        for (std::size_t k = s; k < e; ++k) {
          xb.push_back(encodings[perm[k]]);
          zb.push_back((losses[perm[k]] - mean) / model.target_std());
        }
        total += model.sgd_step(xb, zb, cfg.learning_rate) *
                 static_cast<double>(e - s);
      }
      metrics.epoch_losses.push_back(total / static_cast<double>(perm.size()));
    }
    // Loss of the final parameters over the fitted rows.
    xb.clear();
    zb.clear();
    for (std::size_t i : rows) {
      xb.push_back(encodings[i]);
      zb.push_back((losses[i] - mean) / model.target_std());
    }
    metrics.final_train_loss = model.loss_and_gradient(xb, zb, nullptr);
    return model;
  };

  PredictorMetrics metrics;
  std::vector<std::size_t> train_rows(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test_rows(order.begin() + n_train, order.end());
  PredictorModel model = fit(train_rows, mix64(cfg.rng_seed ^ 0x51), metrics);
  metrics.train_size = train_rows.size();
  metrics.test_size = test_rows.size();
  std::vector<double> pred, truth;
  for (std::size_t i : test_rows) {
    pred.push_back(model.predict(encodings[i]));
    truth.push_back(losses[i]);
  }
  metrics.test_kendall_tau = kendall_tau(pred, truth);

  if (cfg.refit_on_full_data) {
    PredictorMetrics full;
    model = fit(order, mix64(cfg.rng_seed ^ 0xf1), full);
    metrics.final_train_loss = full.final_train_loss;
    metrics.epoch_losses = full.epoch_losses;
    metrics.train_size = order.size();
  }
  return TrainedPredictor{std::move(model), std::move(metrics)};
}

}  // namespace twoshot
