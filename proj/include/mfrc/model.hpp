/*
 * Copyright 2026 The MFRC Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mfrc/centrality.hpp"
#include "mfrc/dataset.hpp"
#include "mfrc/error.hpp"

namespace mfrc {

enum class ModelKind { mfrc, biased_mf, plain_mf, alswr };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::mfrc: return "mfrc";
    case ModelKind::biased_mf: return "biased_mf";
    case ModelKind::plain_mf: return "plain_mf";
    case ModelKind::alswr: return "alswr";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "mfrc") return ModelKind::mfrc;
  if (s == "biased_mf") return ModelKind::biased_mf;
  if (s == "plain_mf") return ModelKind::plain_mf;
  if (s == "alswr") return ModelKind::alswr;
  throw ConfigError("unknown model kind '" + std::string(s) +
                    "' (expected mfrc, biased_mf, plain_mf or alswr)");
}

inline bool has_biases(ModelKind k) { return k == ModelKind::mfrc || k == ModelKind::biased_mf; }

/// Latent-factor model. Column u of P is the user vector p_u, column i of Q
/// the item vector q_i; Eigen's column-major storage keeps each contiguous.
struct FactorModel {
  ModelKind kind = ModelKind::mfrc;
  int k = 0;
  Eigen::MatrixXd P;  // k x m
  Eigen::MatrixXd Q;  // k x n
  Eigen::VectorXd user_bias;
  Eigen::VectorXd item_bias;
  double fallback = 0.0;
  RatingScale scale;
  std::uint64_t seed = 0;
  std::vector<std::uint8_t> user_seen;
  std::vector<std::uint8_t> item_seen;

  std::size_t num_users() const noexcept { return static_cast<std::size_t>(P.cols()); }
  std::size_t num_items() const noexcept { return static_cast<std::size_t>(Q.cols()); }

  bool knows(std::int64_t u, std::int64_t i) const noexcept {
    return u >= 0 && i >= 0 && static_cast<std::size_t>(u) < user_seen.size() &&
           static_cast<std::size_t>(i) < item_seen.size() && user_seen[u] && item_seen[i];
  }

  /// Unclipped model score; caller guarantees ids are in range.
  double score(Index u, Index i) const {
    double s = P.col(u).dot(Q.col(i));
    if (has_biases(kind)) s += user_bias[u] + item_bias[i];
    return s;
  }

  bool all_finite() const {
    return P.allFinite() && Q.allFinite() && user_bias.allFinite() && item_bias.allFinite();
  }

  friend bool operator==(const FactorModel& a, const FactorModel& b) {
    return a.kind == b.kind && a.k == b.k && a.P.rows() == b.P.rows() &&
           a.P.cols() == b.P.cols() && a.Q.rows() == b.Q.rows() && a.Q.cols() == b.Q.cols() &&
           a.P == b.P && a.Q == b.Q && a.user_bias.size() == b.user_bias.size() &&
           a.item_bias.size() == b.item_bias.size() && a.user_bias == b.user_bias &&
           a.item_bias == b.item_bias && a.fallback == b.fallback && a.scale == b.scale &&
           a.seed == b.seed && a.user_seen == b.user_seen && a.item_seen == b.item_seen;
  }
};

/// Zero-initialized model shaped for `train`, with seen masks and fallback.
inline FactorModel empty_model(const RatingDataset& train, ModelKind kind, int k,
                               std::uint64_t seed) {
  FactorModel m;
  m.kind = kind;
  m.k = k;
  m.P = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(train.num_users()));
  m.Q = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(train.num_items()));
  m.user_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(train.num_users()));
  m.item_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(train.num_items()));
  m.fallback = train.empty() ? 0.5 * (train.scale().min + train.scale().max) : global_mean(train);
  m.scale = train.scale();
  m.seed = seed;
  m.user_seen.assign(train.num_users(), 0);
  m.item_seen.assign(train.num_items(), 0);
  for (const auto& t : train.triples()) {
    m.user_seen[t.user] = 1;
    m.item_seen[t.item] = 1;
  }
  return m;
}

struct Prediction {
  double value = 0.0;
  bool fallback = false;
};

/// Clipped prediction; unseen or out-of-range ids get the training mean.
inline Prediction predict(const FactorModel& model, std::int64_t u, std::int64_t i) {
  if (!model.knows(u, i)) return {model.scale.clip(model.fallback), true};
  return {model.scale.clip(model.score(static_cast<Index>(u), static_cast<Index>(i))), false};
}

/// Hyperparameters shared by all trainers.
struct TrainConfig {
  int k = 50;
  int epochs = 100;
  double lambda = 0.05;
  double eta = 0.005;
  std::uint64_t seed = 0;
  NormalizationKind norm = NormalizationKind::tanh;
  double delta = kDefaultDelta;
  double init_sigma = 1e-4;  // std of the normal factor initialization

  void validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be > 0");
    if (!(eta * lambda < 1.0)) throw ConfigError("eta * lambda must be < 1");
    if (!(delta > 0.0)) throw ConfigError("delta must be > 0");
    if (!(init_sigma >= 0.0) || !std::isfinite(init_sigma))
      throw ConfigError("init_sigma must be >= 0");
  }
};

struct TrainTrace {
  std::vector<double> objective;
  std::vector<double> train_rmse;
};

/// Training objective over T with unclipped predictions.
///
/// mfrc: sum of e^2 w + lambda (wu |p|^2 + wi |q|^2 + wu bu^2 + wi bi^2) per pair.
/// biased_mf: the same with unit weights. plain_mf / alswr: sum of
/// e^2 + lambda (|p|^2 + |q|^2) per pair, which equals the count-weighted
/// regularizer of ALS-WR.
inline double objective(const FactorModel& model, const RatingDataset& train, double lambda,
                        const ReliabilityWeights* weights = nullptr) {
  if (model.num_users() != train.num_users() || model.num_items() != train.num_items())
    throw DataError("model dimensions do not match the training set");
  if ((model.kind == ModelKind::mfrc) != (weights != nullptr))
    throw ConfigError("reliability weights are required for, and only for, mfrc");
  if (weights && weights->weight.size() != train.size())
    throw DataError("weights are not aligned with the training set");
  const bool biased = has_biases(model.kind);
  const auto triples = train.triples();
  double j = 0.0;
  for (std::size_t p = 0; p < triples.size(); ++p) {
    const auto& t = triples[p];
    const double e = t.rating - model.score(t.user, t.item);
    const double w = weights ? weights->weight[p] : 1.0;
    const double wu = weights ? weights->user_avg_weight[t.user] : 1.0;
    const double wi = weights ? weights->item_avg_weight[t.item] : 1.0;
    double reg = wu * model.P.col(t.user).squaredNorm() + wi * model.Q.col(t.item).squaredNorm();
    if (biased) {
      const double bu = model.user_bias[t.user];
      const double bi = model.item_bias[t.item];
      reg += wu * bu * bu + wi * bi * bi;
    }
    j += e * e * w + lambda * reg;
  }
  return j;
}

/// RMSE on the training set with unclipped scores.
inline double train_rmse(const FactorModel& model, const RatingDataset& train) {
  if (train.empty()) return 0.0;
  double sse = 0.0;
  for (const auto& t : train.triples()) {
    const double e = t.rating - model.score(t.user, t.item);
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(train.size()));
}

}  // namespace mfrc
