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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mfrc/dataset.hpp"
#include "mfrc/error.hpp"
#include "mfrc/text.hpp"

namespace mfrc {

/// Monotone map applied to the product of the two centralities.
enum class NormalizationKind { tanh, sigmoid, identity };

inline std::string to_string(NormalizationKind k) {
  switch (k) {
    case NormalizationKind::tanh: return "tanh";
    case NormalizationKind::sigmoid: return "sigmoid";
    case NormalizationKind::identity: return "identity";
  }
  return "?";
}

inline NormalizationKind parse_normalization(std::string_view s) {
  if (s == "tanh") return NormalizationKind::tanh;
  if (s == "sigmoid") return NormalizationKind::sigmoid;
  if (s == "identity") return NormalizationKind::identity;
  throw ConfigError("unknown normalization '" + std::string(s) +
                    "' (expected tanh, sigmoid or identity)");
}

inline constexpr double kDefaultDelta = 1e-6;

inline double normalize(NormalizationKind kind, double t) {
  switch (kind) {
    case NormalizationKind::tanh: return std::tanh(t);
    case NormalizationKind::sigmoid: return 1.0 / (1.0 + std::exp(-t));
    case NormalizationKind::identity: return t;
  }
  return t;
}

/// min(1 / (|r - mean| + delta), r_max)
inline double centrality(double rating, double mean, double r_max, double delta) noexcept {
  return std::min(1.0 / (std::abs(rating - mean) + delta), r_max);
}

/// Closeness of a rating to the rater's mean score.
inline double user_centrality(double rating, double user_mean, double r_max,
                              double delta = kDefaultDelta) noexcept {
  return centrality(rating, user_mean, r_max, delta);
}

/// Closeness of a rating to the rated item's mean score.
inline double item_centrality(double rating, double item_mean, double r_max,
                              double delta = kDefaultDelta) noexcept {
  return centrality(rating, item_mean, r_max, delta);
}

/// Reliability of one rating: 1 + f(wU * wI).
inline double combine(double user_c, double item_c, NormalizationKind kind) {
  return 1.0 + normalize(kind, user_c * item_c);
}

namespace detail {

template <class Positions>
std::vector<std::optional<double>> bucket_means(const RatingDataset& ds, std::size_t buckets,
                                                Positions positions) {
  std::vector<std::optional<double>> means(buckets);
  const auto triples = ds.triples();
  for (Index b = 0; b < buckets; ++b) {
    const auto pos = positions(b);
    if (pos.empty()) continue;
    double sum = 0.0;
    for (std::size_t p : pos) sum += triples[p].rating;
    means[b] = sum / static_cast<double>(pos.size());
  }
  return means;
}

}  // namespace detail

/// Mean rating per user; users without ratings are nullopt.
inline std::vector<std::optional<double>> user_means(const RatingDataset& train) {
  return detail::bucket_means(train, train.num_users(),
                              [&](Index u) { return train.user_positions(u); });
}

inline std::vector<std::optional<double>> item_means(const RatingDataset& train) {
  return detail::bucket_means(train, train.num_items(),
                              [&](Index i) { return train.item_positions(i); });
}

/// Per-rating reliabilities aligned with the training triples, plus their
/// per-user and per-item averages used to scale regularization.
struct ReliabilityWeights {
  std::vector<double> weight;
  std::vector<double> user_centrality;
  std::vector<double> item_centrality;
  std::vector<double> user_avg_weight;
  std::vector<double> item_avg_weight;
  std::vector<std::optional<double>> user_mean;
  std::vector<std::optional<double>> item_mean;
  NormalizationKind kind = NormalizationKind::tanh;
  double delta = kDefaultDelta;

  /// All weights 1: turns the weighted objective into the plain biased one.
  static ReliabilityWeights unit(const RatingDataset& train) {
    ReliabilityWeights w;
    w.weight.assign(train.size(), 1.0);
    w.user_centrality.assign(train.size(), 1.0);
    w.item_centrality.assign(train.size(), 1.0);
    w.user_avg_weight.assign(train.num_users(), 1.0);
    w.item_avg_weight.assign(train.num_items(), 1.0);
    w.user_mean = user_means(train);
    w.item_mean = item_means(train);
    return w;
  }
};

/// Builds reliabilities from the training split only. Entities with no
/// training ratings get an average weight of 1.
inline ReliabilityWeights build_weights(const RatingDataset& train, NormalizationKind kind,
                                        double delta = kDefaultDelta) {
  if (train.empty()) throw DataError("cannot build weights from an empty training set");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  ReliabilityWeights w;
  w.kind = kind;
  w.delta = delta;
  w.user_mean = user_means(train);
  w.item_mean = item_means(train);
  const double r_max = train.scale().max;
  const auto triples = train.triples();
  w.weight.resize(triples.size());
  w.user_centrality.resize(triples.size());
  w.item_centrality.resize(triples.size());
  for (std::size_t p = 0; p < triples.size(); ++p) {
    const auto& t = triples[p];
    const double wu = user_centrality(t.rating, *w.user_mean[t.user], r_max, delta);
    const double wi = item_centrality(t.rating, *w.item_mean[t.item], r_max, delta);
    w.user_centrality[p] = wu;
    w.item_centrality[p] = wi;
    w.weight[p] = combine(wu, wi, kind);
  }
  auto averages = [&](std::size_t buckets, auto positions) {
    std::vector<double> avg(buckets, 1.0);
    for (Index b = 0; b < buckets; ++b) {
      const auto pos = positions(b);
      if (pos.empty()) continue;
      double sum = 0.0;
      for (std::size_t p : pos) sum += w.weight[p];
      avg[b] = sum / static_cast<double>(pos.size());
    }
    return avg;
  };
  w.user_avg_weight =
      averages(train.num_users(), [&](Index u) { return train.user_positions(u); });
  w.item_avg_weight =
      averages(train.num_items(), [&](Index i) { return train.item_positions(i); });
  return w;
}

/// Audit dump: `user,item,w_user,w_item,w` (internal ids).
inline void write_weights_csv(std::ostream& out, const RatingDataset& train,
                              const ReliabilityWeights& w) {
  out << "user,item,w_user,w_item,w\n";
  const auto triples = train.triples();
  for (std::size_t p = 0; p < triples.size(); ++p) {
    out << triples[p].user << ',' << triples[p].item << ','
        << text::format_double(w.user_centrality[p]) << ','
        << text::format_double(w.item_centrality[p]) << ',' << text::format_double(w.weight[p])
        << '\n';
  }
}

}  // namespace mfrc
