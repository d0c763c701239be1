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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "mfrc/mfrc.hpp"
#include "oracles.hpp"

namespace mfrc {
namespace {

FactorModel scalar_model(ModelKind kind, double p, double q, double bu, double bi) {
  const RatingDataset one({{0, 0, 4}}, 1, 1, {});
  FactorModel m = empty_model(one, kind, 1, 0);
  m.P(0, 0) = p;
  m.Q(0, 0) = q;
  m.user_bias[0] = bu;
  m.item_bias[0] = bi;
  return m;
}

RatingDataset toy3x3() {
  return RatingDataset({{0, 0, 5}, {0, 1, 3}, {0, 2, 1}, {1, 0, 4}, {1, 2, 2}, {2, 1, 4}, {2, 2, 5}},
                       3, 3, {});
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mfrc_test_" + name);
}

TEST(Predict, ClipsToScale) {
  const auto m = scalar_model(ModelKind::mfrc, 0.1, 0.2, 0.5, 0.3);
  EXPECT_NEAR(m.score(0, 0), 0.82, 1e-15);
  const auto p = predict(m, 0, 0);
  EXPECT_DOUBLE_EQ(p.value, 1.0);
  EXPECT_FALSE(p.fallback);
  const auto hi = scalar_model(ModelKind::biased_mf, 3.0, 3.0, 0, 0);
  EXPECT_DOUBLE_EQ(predict(hi, 0, 0).value, 5.0);
}

TEST(Predict, ZeroModelGivesMinimum) {
  EXPECT_DOUBLE_EQ(predict(scalar_model(ModelKind::plain_mf, 0, 0, 0, 0), 0, 0).value, 1.0);
}

TEST(Predict, UnseenUsesFallback) {
  const RatingDataset train({{0, 0, 4}, {1, 1, 2}}, 3, 3, {});
  const auto m = empty_model(train, ModelKind::mfrc, 2, 0);
  for (auto [u, i] : {std::pair<std::int64_t, std::int64_t>{2, 0}, {0, 2}, {-1, 0}, {0, 99}}) {
    const auto p = predict(m, u, i);
    EXPECT_TRUE(p.fallback);
    EXPECT_DOUBLE_EQ(p.value, 3.0);
  }
}

TEST(Objective, HandEvaluated) {
  const RatingDataset one({{0, 0, 4}}, 1, 1, {});
  FactorModel m = empty_model(one, ModelKind::mfrc, 1, 0);
  ReliabilityWeights w = ReliabilityWeights::unit(one);
  w.weight[0] = 1.5;
  EXPECT_DOUBLE_EQ(objective(m, one, 0.0, &w), 24.0);
  EXPECT_DOUBLE_EQ(objective(m, one, 0.3, &w), 24.0);
  m.user_bias[0] = 4.0;
  EXPECT_DOUBLE_EQ(objective(m, one, 0.0, &w), 0.0);
}

TEST(Objective, ZeroModelIsWeightedSquares) {
  std::mt19937_64 rng(4);
  const auto train = oracle::random_dataset(rng, 6, 7, 0.5);
  const auto w = build_weights(train, NormalizationKind::sigmoid);
  const auto m = empty_model(train, ModelKind::mfrc, 3, 0);
  double expect = 0.0;
  for (std::size_t p = 0; p < train.size(); ++p)
    expect += train.triples()[p].rating * train.triples()[p].rating * w.weight[p];
  EXPECT_NEAR(objective(m, train, 0.05, &w), expect, 1e-12 * expect);
}

TEST(Objective, RejectsMismatches) {
  const auto train = toy3x3();
  const auto w = ReliabilityWeights::unit(train);
  EXPECT_THROW(objective(empty_model(train, ModelKind::mfrc, 1, 0), train, 0.1), ConfigError);
  EXPECT_THROW(objective(empty_model(train, ModelKind::plain_mf, 1, 0), train, 0.1, &w),
               ConfigError);
  const RatingDataset bigger({{0, 0, 3}}, 4, 4, {});
  EXPECT_THROW(objective(empty_model(bigger, ModelKind::plain_mf, 1, 0), train, 0.1), DataError);
}

TEST(SgdStep, WorkedExample) {
  auto m = scalar_model(ModelKind::mfrc, 0.1, 0.2, 0, 0);
  const double e = sgd_step_mfrc(m, {0, 0, 4}, 1.5, 1.5, 1.5, 0.05, 0.005);
  EXPECT_NEAR(e, 3.98, 1e-12);
  EXPECT_NEAR(m.user_bias[0], 0.02985, 1e-12);
  EXPECT_NEAR(m.item_bias[0], 0.02985, 1e-12);
  EXPECT_NEAR(m.P(0, 0), 0.1059325, 1e-12);
  EXPECT_NEAR(m.Q(0, 0), 0.2029100, 1e-12);
}

TEST(SgdStep, FixedPointWhenErrorAndLambdaVanish) {
  auto m = scalar_model(ModelKind::mfrc, 1.0, 2.0, 1.0, 1.0);
  const auto before = m;
  EXPECT_DOUBLE_EQ(sgd_step_mfrc(m, {0, 0, 4}, 1.7, 1.3, 1.9, 0.0, 0.01), 0.0);
  EXPECT_TRUE(m == before);
}

TEST(SgdStep, UnitWeightsMatchBiasedStep) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    const RatingDataset train({{0, 0, 1.0 + trial % 5}}, 1, 1, {});
    FactorModel a = empty_model(train, ModelKind::mfrc, 3, 0);
    for (int f = 0; f < 3; ++f) {
      a.P(f, 0) = g(rng);
      a.Q(f, 0) = g(rng);
    }
    a.user_bias[0] = g(rng);
    a.item_bias[0] = g(rng);
    FactorModel b = a;
    sgd_step_mfrc(a, train.triples()[0], 1.0, 1.0, 1.0, 0.05, 0.01);
    sgd_step<true>(b, train.triples()[0], StepWeights{}, 0.05, 0.01);
    EXPECT_EQ(a.P, b.P);
    EXPECT_EQ(a.Q, b.Q);
    EXPECT_EQ(a.user_bias, b.user_bias);
    EXPECT_EQ(a.item_bias, b.item_bias);
  }
}

// The step is theta -= eta * g/2 where g is the gradient of the per-rating
// loss; recover g/2 from the step and compare with finite differences.
TEST(SgdStep, MatchesFiniteDifferenceGradient) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(-0.8, 0.8), wdist(1.0, 2.0), rdist(1.0, 5.0);
  constexpr double kEta = 1e-3;
  for (int inst = 0; inst < 20; ++inst) {
    const int k = 1 + static_cast<int>(rng() % 3);
    const double r = rdist(rng), w = wdist(rng), wu = wdist(rng), wi = wdist(rng);
    const double lambda = 0.05 + 0.2 * (unif(rng) + 0.8);
    std::vector<double> th(2 + 2 * k);
    for (auto& x : th) x = unif(rng);
    const RatingDataset one({{0, 0, 3}}, 1, 1, {});
    FactorModel m = empty_model(one, ModelKind::mfrc, k, 0);
    m.user_bias[0] = th[0];
    m.item_bias[0] = th[1];
    for (int f = 0; f < k; ++f) {
      m.P(f, 0) = th[2 + f];
      m.Q(f, 0) = th[2 + k + f];
    }
    sgd_step_mfrc(m, {0, 0, r}, w, wu, wi, lambda, kEta);
    std::vector<double> half_grad(th.size());
    half_grad[0] = (th[0] - m.user_bias[0]) / kEta;
    half_grad[1] = (th[1] - m.item_bias[0]) / kEta;
    for (int f = 0; f < k; ++f) {
      half_grad[2 + f] = (th[2 + f] - m.P(f, 0)) / kEta;
      half_grad[2 + k + f] = (th[2 + k + f] - m.Q(f, 0)) / kEta;
    }
    const auto fd = oracle::rating_loss_gradient(th, k, r, w, wu, wi, lambda);
    for (std::size_t j = 0; j < th.size(); ++j) {
      ASSERT_GT(std::abs(fd[j]), 1e-6) << "degenerate component";
      EXPECT_NEAR(fd[j] / half_grad[j], 2.0, 2.0 * 1e-5) << "instance " << inst << " param " << j;
    }
  }
}

TEST(TrainMfrc, DeterministicForFixedConfig) {
  std::mt19937_64 rng(31);
  const auto train = oracle::random_dataset(rng, 8, 9, 0.5);
  TrainConfig cfg;
  cfg.k = 4;
  cfg.epochs = 20;
  cfg.seed = 77;
  cfg.init_sigma = 0.1;
  const auto a = train_mfrc(train, cfg);
  const auto b = train_mfrc(train, cfg);
  EXPECT_TRUE(a.first == b.first);
  EXPECT_EQ(a.second.objective, b.second.objective);
  cfg.seed = 78;
  EXPECT_FALSE(train_mfrc(train, cfg).first == a.first);
}

TEST(TrainMfrc, UnitWeightsReduceToBiasedMf) {
  std::mt19937_64 rng(32);
  const auto train = oracle::random_dataset(rng, 9, 6, 0.6);
  TrainConfig cfg;
  cfg.k = 3;
  cfg.epochs = 25;
  cfg.seed = 5;
  cfg.init_sigma = 0.1;
  const auto [mfrc_model, mfrc_trace] = train_mfrc(train, ReliabilityWeights::unit(train), cfg);
  const auto [bmf_model, bmf_trace] = train_biased_mf(train, cfg);
  EXPECT_EQ(mfrc_model.P, bmf_model.P);
  EXPECT_EQ(mfrc_model.Q, bmf_model.Q);
  EXPECT_EQ(mfrc_model.user_bias, bmf_model.user_bias);
  EXPECT_EQ(mfrc_model.item_bias, bmf_model.item_bias);
  EXPECT_EQ(mfrc_trace.objective, bmf_trace.objective);
}

TEST(TrainMfrc, FitsToyData) {
  TrainConfig cfg;
  cfg.k = 2;
  cfg.epochs = 200;
  cfg.lambda = 0.05;
  cfg.eta = 0.01;
  cfg.seed = 3;
  cfg.init_sigma = 0.1;
  const auto train = toy3x3();
  const auto initial = train_rmse(empty_model(train, ModelKind::mfrc, 2, 0), train);
  const auto [model, trace] = train_mfrc(train, cfg);
  ASSERT_EQ(trace.objective.size(), 200u);
  ASSERT_EQ(trace.train_rmse.size(), 200u);
  EXPECT_LT(trace.train_rmse.back(), 0.1 * initial);
  EXPECT_TRUE(model.all_finite());
}

TEST(TrainMfrc, RejectsForeignWeights) {
  const auto train = toy3x3();
  const RatingDataset other({{0, 0, 3}}, 1, 1, {});
  EXPECT_THROW(train_mfrc(train, ReliabilityWeights::unit(other), TrainConfig{}), DataError);
}

TEST(TrainMfrc, DivergenceIsReported) {
  const auto train = toy3x3();
  TrainConfig cfg;
  cfg.k = 2;
  cfg.epochs = 50;
  cfg.eta = 5.0;
  cfg.lambda = 0.0;
  cfg.init_sigma = 1.0;
  try {
    train_mfrc(train, cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.epoch(), 1);
  }
}

TEST(TrainBiasedMf, ConstantRatingsAbsorbedByBiases) {
  std::vector<RatingTriple> t;
  for (Index u = 0; u < 10; ++u)
    for (Index i = 0; i < 10; ++i)
      if ((u + i) % 3 != 0) t.push_back({u, i, 3.5});
  const RatingDataset train(std::move(t), 10, 10, {});
  TrainConfig cfg;
  cfg.k = 5;
  cfg.epochs = 100;
  cfg.eta = 0.01;
  cfg.lambda = 0.01;
  cfg.seed = 1;
  const auto [model, trace] = train_biased_mf(train, cfg);
  EXPECT_LT(trace.train_rmse.back(), 0.05);
  const auto again = train_biased_mf(train, cfg);
  EXPECT_TRUE(again.first == model);
}

TEST(TrainPlainMf, BiasesStayZero) {
  std::mt19937_64 rng(33);
  const auto train = oracle::random_dataset(rng, 7, 7, 0.5);
  TrainConfig cfg;
  cfg.k = 3;
  cfg.epochs = 30;
  cfg.init_sigma = 0.1;
  const auto [model, trace] = train_plain_mf(train, cfg);
  EXPECT_TRUE(model.user_bias.isZero(0.0));
  EXPECT_TRUE(model.item_bias.isZero(0.0));
  EXPECT_TRUE(train_plain_mf(train, cfg).first == model);
}

TEST(TrainPlainMf, ScalarRecurrence) {
  const RatingDataset one({{0, 0, 4}}, 1, 1, {});
  TrainConfig cfg;
  cfg.k = 1;
  cfg.epochs = 500;
  cfg.lambda = 0.0;
  cfg.eta = 0.01;
  cfg.seed = 2;
  cfg.init_sigma = 0.5;
  const auto [model, trace] = train_plain_mf(one, cfg);
  // oracle: iterate the scalar recurrence from the same starting point
  FactorModel start = empty_model(one, ModelKind::plain_mf, 1, cfg.seed);
  detail::init_factors(start, cfg);
  double p = start.P(0, 0), q = start.Q(0, 0);
  for (int e = 0; e < 500; ++e) {
    const double err = 4.0 - p * q;
    const double np = p + 0.01 * err * q;
    q = q + 0.01 * err * p;
    p = np;
  }
  EXPECT_NEAR(p * q, 4.0, 0.01);
  EXPECT_NEAR(model.P(0, 0) * model.Q(0, 0), 4.0, 0.01);
  EXPECT_NEAR(model.P(0, 0), p, 1e-12);
}

TEST(TrainAlswr, ObjectiveNonIncreasing) {
  std::mt19937_64 rng(41);
  for (int inst = 0; inst < 10; ++inst) {
    const auto train = oracle::random_dataset(rng, 4 + rng() % 6, 4 + rng() % 6, 0.5);
    TrainConfig cfg;
    cfg.k = 1 + static_cast<int>(rng() % 3);
    cfg.epochs = 20;
    cfg.lambda = 0.05;
    cfg.seed = inst;
    cfg.init_sigma = 0.5;
    FactorModel start = empty_model(train, ModelKind::alswr, cfg.k, cfg.seed);
    detail::init_factors(start, cfg);
    double prev = objective(start, train, cfg.lambda);
    const auto [model, trace] = train_alswr(train, cfg);
    for (double j : trace.objective) {
      EXPECT_LE(j, prev * (1.0 + 1e-9));
      prev = j;
    }
    EXPECT_TRUE(model.user_bias.isZero(0.0));
  }
}

TEST(TrainAlswr, SingleRatingClosedForm) {
  const RatingDataset one({{0, 0, 4}}, 1, 1, {});
  TrainConfig cfg;
  cfg.k = 1;
  cfg.epochs = 50;
  cfg.lambda = 0.0;
  cfg.seed = 9;
  cfg.init_sigma = 0.3;
  const auto [model, trace] = train_alswr(one, cfg);
  EXPECT_NEAR(model.P(0, 0) * model.Q(0, 0), 4.0, 1e-6);
}

TEST(TrainAlswr, RankDeficientWithoutRegularization) {
  const RatingDataset one({{0, 0, 4}}, 1, 1, {});
  TrainConfig cfg;
  cfg.k = 2;
  cfg.epochs = 3;
  cfg.lambda = 0.0;
  EXPECT_THROW(train_alswr(one, cfg), SingularSystemError);
  cfg.lambda = 0.05;
  EXPECT_NO_THROW(train_alswr(one, cfg));
}

TEST(TrainModel, DispatchAndValidation) {
  const auto train = toy3x3();
  TrainConfig cfg;
  cfg.k = 2;
  cfg.epochs = 3;
  for (auto kind : {ModelKind::mfrc, ModelKind::biased_mf, ModelKind::plain_mf, ModelKind::alswr})
    EXPECT_EQ(train_model(kind, train, cfg).first.kind, kind);
  cfg.k = 0;
  EXPECT_THROW(train_model(ModelKind::mfrc, train, cfg), ConfigError);
  cfg.k = 2;
  cfg.eta = 100.0;
  EXPECT_THROW(train_model(ModelKind::mfrc, train, cfg), ConfigError);
  EXPECT_THROW(parse_model_kind("svd++"), ConfigError);
}

TEST(Snapshot, RoundTripIsExact) {
  std::mt19937_64 rng(51);
  const auto train = oracle::random_dataset(rng, 5, 6, 0.5);
  TrainConfig cfg;
  cfg.k = 3;
  cfg.epochs = 5;
  cfg.init_sigma = 0.1;
  const auto path = temp_file("roundtrip.json");
  for (auto kind : {ModelKind::mfrc, ModelKind::plain_mf, ModelKind::alswr}) {
    const auto model = train_model(kind, train, cfg).first;
    save_model(model, path.string());
    EXPECT_TRUE(load_model(path.string()) == model);
  }
  std::filesystem::remove(path);
}

TEST(Snapshot, CorruptionAndVersion) {
  const auto model = train_model(ModelKind::biased_mf, toy3x3(), [] {
                       TrainConfig c;
                       c.k = 2;
                       c.epochs = 2;
                       return c;
                     }()).first;
  auto j = to_json(model);
  const std::string text = j.dump();
  const auto path = temp_file("corrupt.json");
  {
    std::ofstream(path) << text.substr(0, text.size() / 2);
  }
  EXPECT_THROW(load_model(path.string()), FormatError);
  j["format_version"] = kModelFormatVersion + 1;
  {
    std::ofstream(path) << j.dump();
  }
  EXPECT_THROW(load_model(path.string()), VersionError);
  j = to_json(model);
  j["P"].erase(0);
  EXPECT_THROW(model_from_json(j), FormatError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_model(path.string()), IoError);
}

}  // namespace
}  // namespace mfrc
