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
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfrc/dataset.hpp"
#include "mfrc/error.hpp"
#include "mfrc/model.hpp"
#include "mfrc/text.hpp"

namespace mfrc {

/// (true rating, predicted rating)
using ScoredPair = std::pair<double, double>;

inline double rmse(std::span<const ScoredPair> pairs) {
  if (pairs.empty()) throw DataError("rmse of an empty test set");
  double sse = 0.0;
  for (const auto& [truth, pred] : pairs) sse += (truth - pred) * (truth - pred);
  return std::sqrt(sse / static_cast<double>(pairs.size()));
}

struct FcpCounts {
  std::optional<double> fcp;  // absent when no pair has distinct true ratings
  std::uint64_t concordant = 0;
  std::uint64_t discordant = 0;
  std::uint64_t skipped = 0;
};

namespace detail {

/// Counts one user's pairs in O(t log t): items are sorted by true rating,
/// then for each group of equal truths we count how many lower-truth items
/// carry a strictly lower prediction (concordant). All other pairs with
/// distinct truths are discordant, including predicted ties.
inline void count_user_pairs(std::vector<ScoredPair>& items, FcpCounts& acc) {
  const std::size_t t = items.size();
  if (t < 2) return;
  std::sort(items.begin(), items.end());
  std::vector<double> lower_preds;  // sorted predictions of items with lower truth
  lower_preds.reserve(t);
  std::size_t g = 0;
  while (g < t) {
    std::size_t end = g;
    while (end < t && items[end].first == items[g].first) ++end;
    const std::uint64_t group = end - g;
    acc.skipped += group * (group - 1) / 2;
    for (std::size_t j = g; j < end; ++j) {
      const double pred = items[j].second;
      const auto below = static_cast<std::uint64_t>(
          std::lower_bound(lower_preds.begin(), lower_preds.end(), pred) - lower_preds.begin());
      acc.concordant += below;
      acc.discordant += lower_preds.size() - below;
    }
    for (std::size_t j = g; j < end; ++j)
      lower_preds.insert(std::upper_bound(lower_preds.begin(), lower_preds.end(), items[j].second),
                         items[j].second);
    g = end;
  }
}

}  // namespace detail

/// Fraction of concordant pairs, aggregated over users (sums first).
template <class Key>
FcpCounts fcp(const std::map<Key, std::vector<ScoredPair>>& per_user) {
  FcpCounts acc;
  std::vector<ScoredPair> scratch;
  for (const auto& [user, items] : per_user) {
    scratch.assign(items.begin(), items.end());
    detail::count_user_pairs(scratch, acc);
  }
  if (acc.concordant + acc.discordant > 0)
    acc.fcp = static_cast<double>(acc.concordant) /
              static_cast<double>(acc.concordant + acc.discordant);
  return acc;
}

struct EvalReport {
  double rmse = 0.0;
  std::optional<double> fcp;
  std::uint64_t concordant = 0;
  std::uint64_t discordant = 0;
  std::uint64_t skipped_pairs = 0;
  std::uint64_t test_size = 0;
  std::uint64_t fallback_predictions = 0;
};

/// Scores every test triple with the clipped predictor (cold start included).
inline EvalReport evaluate(const FactorModel& model, const RatingDataset& test) {
  if (test.empty()) throw DataError("cannot evaluate on an empty test set");
  std::vector<ScoredPair> pairs;
  pairs.reserve(test.size());
  std::map<Index, std::vector<ScoredPair>> per_user;
  EvalReport report;
  for (const auto& t : test.triples()) {
    const Prediction pred = predict(model, t.user, t.item);
    if (pred.fallback) ++report.fallback_predictions;
    pairs.emplace_back(t.rating, pred.value);
    per_user[t.user].emplace_back(t.rating, pred.value);
  }
  report.rmse = rmse(pairs);
  const FcpCounts counts = fcp(per_user);
  report.fcp = counts.fcp;
  report.concordant = counts.concordant;
  report.discordant = counts.discordant;
  report.skipped_pairs = counts.skipped;
  report.test_size = test.size();
  return report;
}

/// Cell key carried next to an EvalReport in CSV output.
struct ReportKey {
  std::string model;
  int k = 0;
  double alpha = 0.0;
  std::string norm = "none";
  std::uint64_t seed = 0;
};

inline constexpr const char* kReportHeader =
    "model,k,alpha,norm,seed,rmse,fcp,concordant,discordant,skipped,fallbacks,test_size";

/// One `kReportHeader` row; an undefined FCP is written as an empty field.
inline std::string report_row(const ReportKey& key, const EvalReport& r) {
  std::string row = key.model + ',' + std::to_string(key.k) + ',' +
                    text::format_double(key.alpha) + ',' + key.norm + ',' +
                    std::to_string(key.seed) + ',' + text::format_double(r.rmse) + ',' +
                    (r.fcp ? text::format_double(*r.fcp) : std::string()) + ',' +
                    std::to_string(r.concordant) + ',' + std::to_string(r.discordant) + ',' +
                    std::to_string(r.skipped_pairs) + ',' +
                    std::to_string(r.fallback_predictions) + ',' + std::to_string(r.test_size);
  return row;
}

}  // namespace mfrc
