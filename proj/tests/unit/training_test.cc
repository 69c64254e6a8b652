// Copyright 2026 The Preflab Authors.
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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "common/oracles.h"
#include "preflab/distribution_design.h"
#include "preflab/errors.h"
#include "preflab/scorers.h"
#include "preflab/tabular_distribution.h"
#include "preflab/training.h"

namespace preflab {
namespace {

TabularTripletDistribution RandomDistribution(int contexts, int m,
                                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Eigen::MatrixXd> tables;
  for (int x = 0; x < contexts; ++x) {
    Eigen::MatrixXd t(m, m);
    for (int i = 0; i < m * m; ++i) t.data()[i] = u(rng);
    tables.push_back(t / t.sum());
  }
  const auto marginal = oracle::RandomSimplex(contexts, rng);
  return TabularTripletDistribution(
      Eigen::Map<const Eigen::VectorXd>(marginal.data(), contexts), tables);
}

ScoreModel RandomTabular(int contexts, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.5);
  Eigen::VectorXd p(contexts * m);
  for (int i = 0; i < p.size(); ++i) p[i] = normal(rng);
  return ScoreModel(ScoreKind::kTabular, ModelDims::Tabular(contexts, m), p);
}

// Brute-force population loss: every (x, i, j) outcome weighted by its mass.
double ReferencePopulationLoss(const TabularTripletDistribution& dist,
                               const ScoreTable& r) {
  double loss = 0.0;
  for (int x = 0; x < dist.num_contexts(); ++x) {
    for (int i = 0; i < dist.num_items(); ++i) {
      for (int j = 0; j < dist.num_items(); ++j) {
        loss -= dist.Joint(x, i, j) * oracle::LogSigmoid(r(x, i) - r(x, j));
      }
    }
  }
  return loss;
}

TEST(LossTest, EmpiricalLossValues) {
  const ScoreModel zero =
      InitModel(ScoreKind::kTabular, ModelDims::Tabular(1, 3), 0);
  TripletDataset data;
  data.triplets = {{0, 0, 1}, {0, 1, 2}};
  EXPECT_NEAR(BtEmpiricalLoss(zero, nullptr, data), std::log(2.0), 1e-15);

  ScoreTable s(1, 3);
  s << 1.0, 0.0, 0.0;
  data.triplets = {{0, 0, 1}, {0, 1, 0}, {0, 1, 2}};
  const double expected = -(oracle::LogSigmoid(1.0) + oracle::LogSigmoid(-1.0) +
                            std::log(0.5)) / 3.0;
  EXPECT_NEAR(BtEmpiricalLoss(s, data), expected, 1e-15);

  s << 800.0, 0.0, 0.0;
  data.triplets = {{0, 0, 1}};
  EXPECT_LT(BtEmpiricalLoss(s, data), 1e-300);
}

TEST(LossTest, PopulationLossCases) {
  Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(3, 3, 1.0 / 9.0);
  const ScoreModel zero =
      InitModel(ScoreKind::kTabular, ModelDims::Tabular(1, 3), 0);
  EXPECT_NEAR(BtPopulationLoss(zero, nullptr,
                               TabularTripletDistribution::SingleContext(uniform)),
              std::log(2.0), 1e-15);

  Eigen::MatrixXd point = Eigen::MatrixXd::Zero(2, 2);
  point(0, 1) = 1.0;
  const ScoreModel margin2(ScoreKind::kTabular, ModelDims::Tabular(1, 2),
                           (Eigen::VectorXd(2) << 1.0, -1.0).finished());
  EXPECT_NEAR(BtPopulationLoss(margin2, nullptr,
                               TabularTripletDistribution::SingleContext(point)),
              0.1269280110429725, 1e-12);
}

TEST(LossTest, PopulationLossMatchesEnumeration) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto dist = RandomDistribution(2, 4, rng);
    const ScoreModel model = RandomTabular(2, 4, rng);
    EXPECT_NEAR(BtPopulationLoss(model, nullptr, dist),
                ReferencePopulationLoss(dist, ComputeScoreTable(model, nullptr)),
                1e-13);
  }
}

TEST(LossTest, PopulationGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  const auto dist = RandomDistribution(2, 3, rng);
  const ScoreModel model = RandomTabular(2, 3, rng);
  const Eigen::VectorXd g = BtPopulationLossGradient(model, nullptr, dist);
  const auto loss = [&](std::vector<double> p) {
    const ScoreModel probe(ScoreKind::kTabular, model.dims(),
                           Eigen::Map<const Eigen::VectorXd>(p.data(), p.size()));
    return ReferencePopulationLoss(dist, ComputeScoreTable(probe, nullptr));
  };
  const std::vector<double> p(model.params().data(),
                              model.params().data() + model.num_params());
  for (int k = 0; k < model.num_params(); ++k) {
    EXPECT_NEAR(g[k], oracle::CentralDifference(loss, p, k, 1e-6), 1e-8);
  }
}

TEST(LossTest, InvariantToContextShift) {
  std::mt19937_64 rng(8);
  const auto dist = RandomDistribution(3, 4, rng);
  ScoreModel model = RandomTabular(3, 4, rng);
  const double before = BtPopulationLoss(model, nullptr, dist);
  for (int y = 0; y < 4; ++y) model.mutable_params()[4 + y] += 3.7;
  EXPECT_NEAR(BtPopulationLoss(model, nullptr, dist), before, 1e-13);
}

TEST(KlDecompositionTest, IdentityAndModelIndependentConstant) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + trial % 4;
    const auto dist = RandomDistribution(2, m, rng);
    const ScoreModel a = RandomTabular(2, m, rng);
    const ScoreModel b = RandomTabular(2, m, rng);
    const KlDecomposition da = DecomposeBtLoss(dist, a, nullptr);
    const KlDecomposition db = DecomposeBtLoss(dist, b, nullptr);
    EXPECT_NEAR(da.reconstructed, BtPopulationLoss(a, nullptr, dist), 1e-9);
    EXPECT_NEAR(da.reconstructed,
                ReferencePopulationLoss(dist, ComputeScoreTable(a, nullptr)),
                1e-9);
    EXPECT_DOUBLE_EQ(da.constant, db.constant);
    EXPECT_DOUBLE_EQ(da.normalizer, db.normalizer);
    EXPECT_GE(da.expected_kl, 0.0);
  }
}

TEST(KlDecompositionTest, ZeroKlAtExactFit) {
  // BT table with scores (0, 1, -0.5) under a product construction.
  const ScoreTable r = (ScoreTable(1, 3) << 0.0, 1.0, -0.5).finished();
  const auto dist = ProductDistribution(
      BtConsistentPair(r, UniformNegative(1, 3)));
  const ScoreModel model(ScoreKind::kTabular, ModelDims::Tabular(1, 3),
                         (Eigen::VectorXd(3) << 0.0, 1.0, -0.5).finished());
  const KlDecomposition d = DecomposeBtLoss(dist, model, nullptr);
  EXPECT_NEAR(d.expected_kl, 0.0, 1e-15);
  EXPECT_NEAR(BtPopulationLoss(model, nullptr, dist), d.constant, 1e-14);
}

TEST(AdamTest, ZeroGradientLeavesParametersUnchanged) {
  AdamOptimizer adam(3, 0.1);
  Eigen::VectorXd p = (Eigen::VectorXd(3) << 1, 2, 3).finished();
  const Eigen::VectorXd before = p;
  for (int k = 0; k < 5; ++k) adam.Step(p, Eigen::VectorXd::Zero(3));
  EXPECT_EQ(p, before);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  AdamOptimizer adam(2, 0.01);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(2);
  adam.Step(p, (Eigen::VectorXd(2) << 3.0, -0.5).finished());
  EXPECT_NEAR(p[0], -0.01, 1e-9);
  EXPECT_NEAR(p[1], 0.01, 1e-9);
}

TEST(TrainTest, ConfigValidation) {
  TrainConfig config;
  config.epochs = 0;
  EXPECT_THROW(ValidateTrainConfig(config), PreflabError);
  config.epochs = 1;
  config.learning_rates = {};
  EXPECT_THROW(ValidateTrainConfig(config), PreflabError);
  config.learning_rates = {-1.0};
  EXPECT_THROW(ValidateTrainConfig(config), PreflabError);
}

TEST(TrainTest, OnePairLogisticRegression) {
  TripletDataset data;
  for (int k = 0; k < 50; ++k) data.triplets.push_back({0, 0, 1});
  TrainConfig config;
  config.epochs = 100;
  config.batch_size = 16;
  const ScoreModel initial =
      InitModel(ScoreKind::kTabular, ModelDims::Tabular(1, 2), 0);
  const TrainResult result = TrainBt(initial, nullptr, data, data, config);
  EXPECT_GT(PairwiseMargin(result.model, nullptr, 0, 0, 1), 1.0);
  EXPECT_LT(result.final_validation_loss, std::log(2.0));
  EXPECT_EQ(result.loss_history.size(), 100u);
  EXPECT_EQ(result.runs.size(), 3u);
  EXPECT_NEAR(result.model.params().sum(), 0.0, 1e-12);
}

TEST(TrainTest, DeterministicAndRecoversTabularScores) {
  const ScoreTable r = (ScoreTable(2, 4) << 0.0, 0.8, -0.6, 0.3,
                                            0.5, -0.5, 0.0, 1.0).finished();
  const ConditionalPair pair = BtConsistentPair(r, UniformNegative(2, 4));
  const TripletDataset train = SampleTriplets(pair, 100000, 1);
  const TripletDataset val = SampleTriplets(pair, 2048, 2);
  TrainConfig config;
  config.epochs = 10;
  config.learning_rates = {1e-3};
  config.seed = 3;
  const ScoreModel initial =
      InitModel(ScoreKind::kTabular, ModelDims::Tabular(2, 4), 0);
  const TrainResult a = TrainBt(initial, nullptr, train, val, config);
  const TrainResult b = TrainBt(initial, nullptr, train, val, config);
  EXPECT_EQ(a.model.params(), b.model.params());
  EXPECT_EQ(a.final_validation_loss, b.final_validation_loss);
  for (int x = 0; x < 2; ++x) {
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        if (i == j) continue;
        EXPECT_NEAR(Sigmoid(PairwiseMargin(a.model, nullptr, x, i, j)),
                    oracle::Sigmoid(r(x, i) - r(x, j)), 0.02);
      }
    }
  }
}

TEST(TrainTest, DivergedRunsAreExcluded) {
  TripletDataset data;
  data.triplets = {{0, 0, 1}, {0, 1, 0}};
  TrainConfig config;
  config.epochs = 3;
  config.learning_rates = {1e300};
  const ScoreModel initial = InitModel(ScoreKind::kCosineMlp,
                                       ModelDims::CosineMlp(2, 2, 2), 1);
  const ItemSet items = ItemSet::Gaussian(2, 2, 1);
  // A huge rate either diverges (error) or completes with a finite loss;
  // it must never report a non-finite selected loss.
  try {
    const TrainResult result = TrainBt(initial, &items, data, data, config);
    EXPECT_TRUE(std::isfinite(result.final_validation_loss));
  } catch (const PreflabError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTrainingDiverged);
  }
}

TEST(FitPopulationTest, SaturatedFitMatchesOmega) {
  const ScoreTable r = (ScoreTable(1, 4) << 0.2, -1.0, 0.7, 0.0).finished();
  const auto dist =
      ProductDistribution(BtConsistentPair(r, UniformNegative(1, 4)));
  const ScoreModel fitted = FitPopulation(
      InitModel(ScoreKind::kTabular, ModelDims::Tabular(1, 4), 0), nullptr, dist,
      3000, 0.05);
  EXPECT_LT(DecomposeBtLoss(dist, fitted, nullptr).expected_kl, 1e-6);
}

TEST(GenerativeTest, EqualsCountCprd) {
  TripletDataset data;
  data.triplets = {{0, 1, 2}, {0, 2, 1}, {0, 1, 2}, {1, 0, 2}};
  const Cprd a = GenerativeRecoveredCprd(data, 3);
  const Cprd b = CprdFromCounts(data, 3);
  for (int x = 0; x < 3; ++x) {
    EXPECT_EQ(a.omega[x], b.omega[x]);
    EXPECT_EQ(a.support[x], b.support[x]);
  }
  EXPECT_FALSE(a.support[0](0, 1));
}

}  // namespace
}  // namespace preflab
