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

#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "mfrc/dataset.hpp"
#include "mfrc/error.hpp"
#include "mfrc/model.hpp"
#include "mfrc/sgd.hpp"

namespace mfrc {

namespace detail {

/// Solves every column of `target` against the fixed factors `other`:
///   x = (F F^T + lambda n I)^-1 F r
/// where F stacks the fixed factors of the entity's n rated counterparts.
/// Columns without ratings are left untouched.
template <class Positions, class Counterpart>
void als_half_sweep(Eigen::MatrixXd& target, const Eigen::MatrixXd& other,
                    const RatingDataset& train, double lambda, Positions positions,
                    Counterpart counterpart, const char* block) {
  const Eigen::Index k = target.rows();
  const auto triples = train.triples();
  Eigen::MatrixXd normal(k, k);
  Eigen::VectorXd rhs(k);
  for (Eigen::Index col = 0; col < target.cols(); ++col) {
    const auto pos = positions(static_cast<Index>(col));
    if (pos.empty()) continue;
    normal.setZero();
    rhs.setZero();
    for (std::size_t p : pos) {
      const auto f = other.col(counterpart(triples[p]));
      normal.selfadjointView<Eigen::Lower>().rankUpdate(f);
      rhs.noalias() += triples[p].rating * f;
    }
    normal.diagonal().array() += lambda * static_cast<double>(pos.size());
    if (lambda > 0.0) {
      Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(normal);
      if (llt.info() != Eigen::Success)
        throw SingularSystemError(std::string("ALS normal matrix not positive definite in ") +
                                  block);
      target.col(col) = llt.solve(rhs);
      continue;
    }
    // lambda == 0: accept only a full-rank system.
    Eigen::MatrixXd full = normal.selfadjointView<Eigen::Lower>();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(full);
    if (qr.rank() < k)
      throw SingularSystemError(std::string("rank-deficient ALS normal matrix in ") + block +
                                " column " + std::to_string(col) + " with lambda = 0");
    target.col(col) = qr.solve(rhs);
  }
}

}  // namespace detail

/// Alternating least squares with count-weighted regularization. One epoch
/// is a full sweep: all user columns, then all item columns.
inline std::pair<FactorModel, TrainTrace> train_alswr(const RatingDataset& train,
                                                      const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw DataError("cannot train on an empty dataset");
  FactorModel model = empty_model(train, ModelKind::alswr, cfg.k, cfg.seed);
  detail::init_factors(model, cfg);
  TrainTrace trace;
  for (int sweep = 1; sweep <= cfg.epochs; ++sweep) {
    detail::als_half_sweep(
        model.P, model.Q, train, cfg.lambda, [&](Index u) { return train.user_positions(u); },
        [](const RatingTriple& t) { return static_cast<Eigen::Index>(t.item); }, "user factors P");
    detail::als_half_sweep(
        model.Q, model.P, train, cfg.lambda, [&](Index i) { return train.item_positions(i); },
        [](const RatingTriple& t) { return static_cast<Eigen::Index>(t.user); }, "item factors Q");
    detail::check_finite(model, sweep);
    trace.objective.push_back(objective(model, train, cfg.lambda));
    trace.train_rmse.push_back(train_rmse(model, train));
  }
  return {std::move(model), std::move(trace)};
}

}  // namespace mfrc
