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
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "mfrc/centrality.hpp"
#include "mfrc/dataset.hpp"
#include "mfrc/error.hpp"
#include "mfrc/model.hpp"
#include "mfrc/random.hpp"

namespace mfrc {

struct StepWeights {
  double weight = 1.0;     // w_ui
  double user_avg = 1.0;   // mean weight of u's ratings
  double item_avg = 1.0;   // mean weight of i's ratings
};

/// One weighted SGD step on a single rating. Returns the prediction error.
///
///   e   = r - (bu + bi + p.q)
///   bu -= eta (lambda wu bu - e w)
///   bi -= eta (lambda wi bi - e w)
///   p  -= eta (lambda wu p  - e w q)
///   q  -= eta (lambda wi q  - e w p)
///
/// The factor updates read p and q as they were before the step. With
/// `use_biases == false` the bias terms are neither read nor written.
template <bool use_biases = true>
inline double sgd_step(FactorModel& model, const RatingTriple& t, const StepWeights& w,
                       double lambda, double eta) {
  auto p = model.P.col(t.user);
  auto q = model.Q.col(t.item);
  double pred = p.dot(q);
  if constexpr (use_biases) pred += model.user_bias[t.user] + model.item_bias[t.item];
  const double e = t.rating - pred;
  const double ew = e * w.weight;
  if constexpr (use_biases) {
    double& bu = model.user_bias[t.user];
    double& bi = model.item_bias[t.item];
    bu -= eta * (lambda * w.user_avg * bu - ew);
    bi -= eta * (lambda * w.item_avg * bi - ew);
  }
  const double shrink_u = lambda * w.user_avg;
  const double shrink_i = lambda * w.item_avg;
  for (Eigen::Index f = 0; f < p.size(); ++f) {
    const double pf = p[f];
    const double qf = q[f];
    p[f] = pf - eta * (shrink_u * pf - ew * qf);
    q[f] = qf - eta * (shrink_i * qf - ew * pf);
  }
  return e;
}

/// MFRC update for one training triple.
inline double sgd_step_mfrc(FactorModel& model, const RatingTriple& t, double w, double user_avg,
                            double item_avg, double lambda, double eta) {
  return sgd_step<true>(model, t, StepWeights{w, user_avg, item_avg}, lambda, eta);
}

namespace detail {

inline void init_factors(FactorModel& model, const TrainConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, 0x1417));
  const double sigma = cfg.init_sigma;
  for (Eigen::Index u = 0; u < model.P.cols(); ++u)
    for (Eigen::Index f = 0; f < model.P.rows(); ++f) model.P(f, u) = sigma * rng.normal();
  for (Eigen::Index i = 0; i < model.Q.cols(); ++i)
    for (Eigen::Index f = 0; f < model.Q.rows(); ++f) model.Q(f, i) = sigma * rng.normal();
}

inline void check_finite(const FactorModel& model, int epoch) {
  if (!model.P.allFinite()) throw DivergenceError(epoch, "user factors P");
  if (!model.Q.allFinite()) throw DivergenceError(epoch, "item factors Q");
  if (!model.user_bias.allFinite()) throw DivergenceError(epoch, "user biases");
  if (!model.item_bias.allFinite()) throw DivergenceError(epoch, "item biases");
}

/// Shared SGD loop. `weights_of(position)` yields the StepWeights of a
/// training triple; the epoch order is a seeded reshuffle of all positions.
template <bool use_biases, class WeightsOf>
std::pair<FactorModel, TrainTrace> train_sgd(const RatingDataset& train, const TrainConfig& cfg,
                                             ModelKind kind, WeightsOf weights_of,
                                             const ReliabilityWeights* objective_weights) {
  cfg.validate();
  if (train.empty()) throw DataError("cannot train on an empty dataset");
  FactorModel model = empty_model(train, kind, cfg.k, cfg.seed);
  init_factors(model, cfg);
  TrainTrace trace;
  trace.objective.reserve(static_cast<std::size_t>(cfg.epochs));
  trace.train_rmse.reserve(static_cast<std::size_t>(cfg.epochs));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng order_rng(mix_seed(cfg.seed, 0x0de7));
  const auto triples = train.triples();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t p : order) {
      const double e = sgd_step<use_biases>(model, triples[p], weights_of(p), cfg.lambda, cfg.eta);
      if (!std::isfinite(e)) throw DivergenceError(epoch, "prediction error");
    }
    check_finite(model, epoch);
    trace.objective.push_back(objective(model, train, cfg.lambda, objective_weights));
    trace.train_rmse.push_back(train_rmse(model, train));
  }
  return {std::move(model), std::move(trace)};
}

}  // namespace detail

/// Reliability-weighted biased MF trained by SGD.
inline std::pair<FactorModel, TrainTrace> train_mfrc(const RatingDataset& train,
                                                     const ReliabilityWeights& weights,
                                                     const TrainConfig& cfg) {
  if (weights.weight.size() != train.size() ||
      weights.user_avg_weight.size() != train.num_users() ||
      weights.item_avg_weight.size() != train.num_items())
    throw DataError("reliability weights were not built from this training set");
  const auto triples = train.triples();
  return detail::train_sgd<true>(
      train, cfg, ModelKind::mfrc,
      [&](std::size_t p) {
        return StepWeights{weights.weight[p], weights.user_avg_weight[triples[p].user],
                           weights.item_avg_weight[triples[p].item]};
      },
      &weights);
}

inline std::pair<FactorModel, TrainTrace> train_mfrc(const RatingDataset& train,
                                                     const TrainConfig& cfg) {
  return train_mfrc(train, build_weights(train, cfg.norm, cfg.delta), cfg);
}

/// Biased MF: the MFRC updates with every weight equal to 1.
inline std::pair<FactorModel, TrainTrace> train_biased_mf(const RatingDataset& train,
                                                          const TrainConfig& cfg) {
  return detail::train_sgd<true>(
      train, cfg, ModelKind::biased_mf, [](std::size_t) { return StepWeights{}; }, nullptr);
}

/// Plain MF: prediction p.q, no biases.
inline std::pair<FactorModel, TrainTrace> train_plain_mf(const RatingDataset& train,
                                                         const TrainConfig& cfg) {
  return detail::train_sgd<false>(
      train, cfg, ModelKind::plain_mf, [](std::size_t) { return StepWeights{}; }, nullptr);
}

}  // namespace mfrc
