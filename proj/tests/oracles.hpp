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

// Test-only reference implementations. None of these call into the code
// paths they are used to check.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "mfrc/mfrc.hpp"

namespace mfrc::oracle {

/// Long-double re-summation of the squared errors.
inline double rmse(const std::vector<std::pair<double, double>>& pairs) {
  long double sse = 0.0L;
  for (const auto& [t, p] : pairs) {
    const long double d = static_cast<long double>(t) - static_cast<long double>(p);
    sse += d * d;
  }
  return static_cast<double>(std::sqrt(sse / static_cast<long double>(pairs.size())));
}

struct PairCounts {
  std::uint64_t concordant = 0;
  std::uint64_t discordant = 0;
  std::uint64_t skipped = 0;
};

/// O(t^2) enumeration of every unordered pair of each user's test items.
template <class Key>
PairCounts fcp_pairs(const std::map<Key, std::vector<std::pair<double, double>>>& per_user) {
  PairCounts c;
  for (const auto& [u, items] : per_user) {
    for (std::size_t a = 0; a < items.size(); ++a) {
      for (std::size_t b = a + 1; b < items.size(); ++b) {
        const auto& [ra, pa] = items[a];
        const auto& [rb, pb] = items[b];
        if (ra == rb) {
          ++c.skipped;
          continue;
        }
        const bool correct = ra > rb ? pa > pb : pb > pa;
        if (correct)
          ++c.concordant;
        else
          ++c.discordant;
      }
    }
  }
  return c;
}

/// Parameters touched by one rating, in a flat vector:
/// [b_u, b_i, p_0..p_{k-1}, q_0..q_{k-1}].
struct RatingParams {
  std::vector<double> theta;
  int k = 0;
};

/// Single-rating term of the weighted objective:
///   (r - bu - bi - p.q)^2 w + lambda (wu |p|^2 + wi |q|^2 + wu bu^2 + wi bi^2)
inline double rating_loss(const std::vector<double>& th, int k, double r, double w, double wu,
                          double wi, double lambda) {
  const double bu = th[0], bi = th[1];
  double dot = 0.0, pp = 0.0, qq = 0.0;
  for (int f = 0; f < k; ++f) {
    const double p = th[2 + f], q = th[2 + k + f];
    dot += p * q;
    pp += p * p;
    qq += q * q;
  }
  const double e = r - bu - bi - dot;
  return e * e * w + lambda * (wu * pp + wi * qq + wu * bu * bu + wi * bi * bi);
}

/// Central finite differences of rating_loss.
inline std::vector<double> rating_loss_gradient(std::vector<double> th, int k, double r, double w,
                                                double wu, double wi, double lambda,
                                                double h = 1e-6) {
  std::vector<double> g(th.size());
  for (std::size_t j = 0; j < th.size(); ++j) {
    const double orig = th[j];
    th[j] = orig + h;
    const double up = rating_loss(th, k, r, w, wu, wi, lambda);
    th[j] = orig - h;
    const double down = rating_loss(th, k, r, w, wu, wi, lambda);
    th[j] = orig;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Small random dataset: each (u, i) cell observed with probability `density`
/// (at least one rating per user), integer ratings 1..5.
inline RatingDataset random_dataset(std::mt19937_64& rng, std::size_t m, std::size_t n,
                                    double density) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> star(1, 5);
  std::vector<RatingTriple> triples;
  for (Index u = 0; u < m; ++u) {
    bool any = false;
    for (Index i = 0; i < n; ++i) {
      if (coin(rng) < density) {
        triples.push_back({u, i, static_cast<double>(star(rng))});
        any = true;
      }
    }
    if (!any) triples.push_back({u, static_cast<Index>(u % n), static_cast<double>(star(rng))});
  }
  return RatingDataset(std::move(triples), m, n, RatingScale{1.0, 5.0});
}

}  // namespace mfrc::oracle
