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
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "common/oracles.h"
#include "preflab/errors.h"
#include "preflab/representability.h"
#include "preflab/tabular_distribution.h"

namespace preflab {
namespace {

Cprd FullCprd(const Eigen::MatrixXd& omega) {
  const int m = static_cast<int>(omega.rows());
  BoolMatrix support = BoolMatrix::Constant(m, m, true);
  support.diagonal().setConstant(false);
  return {{omega}, {support}};
}

Cprd CprdFromScores(const std::vector<double>& s) {
  const int m = static_cast<int>(s.size());
  Eigen::MatrixXd omega = Eigen::MatrixXd::Constant(m, m, 0.5);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i != j) omega(i, j) = oracle::Sigmoid(s[i] - s[j]);
    }
  }
  return FullCprd(omega);
}

ConditionalPair RandomPair(int contexts, int m, std::mt19937_64& rng) {
  ConditionalPair pair;
  pair.p_plus.resize(contexts, m);
  pair.p_minus.resize(contexts, m);
  for (int x = 0; x < contexts; ++x) {
    const auto plus = oracle::RandomSimplex(m, rng, 0.01);
    const auto minus = oracle::RandomSimplex(m, rng, 0.01);
    for (int y = 0; y < m; ++y) {
      pair.p_plus(x, y) = plus[y];
      pair.p_minus(x, y) = minus[y];
    }
  }
  const auto marginal = oracle::RandomSimplex(contexts, rng);
  pair.context_marginal =
      Eigen::Map<const Eigen::VectorXd>(marginal.data(), contexts);
  return pair;
}

TEST(RepresentabilityTest, WitnessRecoversScores) {
  const RepresentabilityVerdict v =
      CheckBtRepresentable(CprdFromScores({0.0, 1.0, 2.0}));
  ASSERT_TRUE(v.representable);
  ASSERT_TRUE(v.witness_scores.has_value());
  EXPECT_FALSE(v.violating_cycle.has_value());
  const auto& w = *v.witness_scores;
  EXPECT_NEAR(w(0, 1) - w(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(w(0, 2) - w(0, 0), 2.0, 1e-12);
}

TEST(RepresentabilityTest, CyclicInstanceReportsCycleSum) {
  Eigen::MatrixXd omega(3, 3);
  omega << 0.5, 0.9, 0.1,
           0.1, 0.5, 0.9,
           0.9, 0.1, 0.5;
  const RepresentabilityVerdict v = CheckBtRepresentable(FullCprd(omega));
  EXPECT_FALSE(v.representable);
  EXPECT_FALSE(v.witness_scores.has_value());
  ASSERT_TRUE(v.violating_cycle.has_value());
  EXPECT_NEAR(v.violating_cycle->log_odds_sum, 3.0 * std::log(9.0), 1e-9);
  EXPECT_EQ(v.violating_cycle->items.size(), 3u);
}

TEST(RepresentabilityTest, ConstantHalfIsRepresentable) {
  const RepresentabilityVerdict v =
      CheckBtRepresentable(FullCprd(Eigen::MatrixXd::Constant(4, 4, 0.5)));
  ASSERT_TRUE(v.representable);
  EXPECT_LT(v.witness_scores->cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RepresentabilityTest, OneSidedPairIsInfiniteLogOdds) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Constant(2, 2, 0.5);
  omega(0, 1) = 1.0;
  omega(1, 0) = 0.0;
  try {
    CheckBtRepresentable(FullCprd(omega));
    FAIL();
  } catch (const PreflabError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfiniteLogOdds);
  }
}

TEST(RepresentabilityTest, EmptySupportIsTriviallyRepresentable) {
  Cprd cprd{{Eigen::MatrixXd::Constant(3, 3, 0.5)},
            {BoolMatrix::Constant(3, 3, false)}};
  const RepresentabilityVerdict v = CheckBtRepresentable(cprd);
  EXPECT_TRUE(v.representable);
}

TEST(RepresentabilityTest, ProductDistributionsAreRepresentable) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + trial % 7;
    const ConditionalPair pair = RandomPair(2, m, rng);
    const Cprd cprd = CprdFromDistribution(ProductDistribution(pair));
    const RepresentabilityVerdict v = CheckBtRepresentable(cprd, 1e-9);
    ASSERT_TRUE(v.representable) << "trial " << trial;
    // Witness reproduces omega.
    for (int x = 0; x < 2; ++x) {
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          if (!cprd.support[x](i, j)) continue;
          const double s = (*v.witness_scores)(x, i) - (*v.witness_scores)(x, j);
          EXPECT_NEAR(oracle::Sigmoid(s), cprd.omega[x](i, j), 1e-9);
        }
      }
    }
  }
}

TEST(RepresentabilityTest, VerdictInvariantToItemOrder) {
  Eigen::MatrixXd omega(4, 4);
  omega << 0.5, 0.7, 0.6, 0.2,
           0.3, 0.5, 0.8, 0.4,
           0.4, 0.2, 0.5, 0.9,
           0.8, 0.6, 0.1, 0.5;
  std::vector<int> perm = {2, 0, 3, 1};
  Eigen::MatrixXd permuted(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) permuted(i, j) = omega(perm[i], perm[j]);
  }
  EXPECT_EQ(CheckBtRepresentable(FullCprd(omega)).representable,
            CheckBtRepresentable(FullCprd(permuted)).representable);
  EXPECT_EQ(CheckBtRepresentable(CprdFromScores({0.3, -1, 2, 0.1})).representable,
            true);
}

TEST(CiFactorizeTest, ClosedForms) {
  const ScoreTable zero = ScoreTable::Zero(1, 3);
  const ScoreTable mu = (ScoreTable(1, 3) << 1, 2, 3).finished();
  ConditionalPair p = CiFactorize(zero, mu);
  EXPECT_NEAR((p.p_plus - p.p_minus).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  EXPECT_NEAR(p.p_minus(0, 2), 0.5, 1e-15);

  const ScoreTable r = (ScoreTable(1, 2) << std::log(2.0), 0.0).finished();
  p = CiFactorize(r, ScoreTable::Constant(1, 2, 0.5));
  EXPECT_NEAR(p.p_plus(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p.p_plus(0, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(p.p_minus(0, 0), 0.5, 1e-15);
}

TEST(CiFactorizeTest, RoundTripUpToContextShift) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_real_distribution<double> positive(0.1, 1.0);
  ScoreTable r(3, 5), mu(3, 5);
  for (int x = 0; x < 3; ++x) {
    for (int y = 0; y < 5; ++y) {
      r(x, y) = normal(rng);
      mu(x, y) = positive(rng);
    }
  }
  const ImpliedScore implied = ComputeImpliedScore(CiFactorize(r, mu));
  for (int x = 0; x < 3; ++x) {
    const Eigen::RowVectorXd shift = implied.scores.row(x) - r.row(x);
    EXPECT_LT((shift.array() - shift.mean()).abs().maxCoeff(), 1e-10);
  }
}

TEST(CiFactorizeTest, ScoreRangeAndPositivity) {
  ScoreTable r = ScoreTable::Zero(1, 2);
  r(0, 0) = 800.0;
  try {
    CiFactorize(r, ScoreTable::Constant(1, 2, 0.5));
    FAIL();
  } catch (const PreflabError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kScoreRange);
  }
  EXPECT_THROW(CiFactorize(ScoreTable::Zero(1, 2), ScoreTable::Zero(1, 2)),
               PreflabError);
}

TEST(ImpliedScoreTest, KnownPairAndSentinels) {
  ConditionalPair pair;
  pair.p_plus = (ScoreTable(1, 3) << 2.0 / 3.0, 1.0 / 3.0, 0.0).finished();
  pair.p_minus = (ScoreTable(1, 3) << 0.5, 0.25, 0.25).finished();
  pair.context_marginal = Eigen::VectorXd::Ones(1);
  const ImpliedScore s = ComputeImpliedScore(pair);
  EXPECT_NEAR(s.scores(0, 0), std::log(4.0 / 3.0), 1e-15);
  EXPECT_NEAR(s.scores(0, 1), std::log(4.0 / 3.0), 1e-15);
  EXPECT_TRUE(s.minus_infinity(0, 2));
  EXPECT_TRUE(std::isinf(s.scores(0, 2)));

  pair.p_plus = (ScoreTable(1, 2) << 0.5, 0.5).finished();
  pair.p_minus = (ScoreTable(1, 2) << 1.0, 0.0).finished();
  EXPECT_THROW(ComputeImpliedScore(pair), PreflabError);
}

TEST(ProductDistributionTest, OuterProducts) {
  ConditionalPair pair;
  pair.p_plus = (ScoreTable(1, 2) << 1.0, 0.0).finished();
  pair.p_minus = (ScoreTable(1, 2) << 0.0, 1.0).finished();
  pair.context_marginal = Eigen::VectorXd::Ones(1);
  const auto point = ProductDistribution(pair);
  EXPECT_DOUBLE_EQ(point.table(0)(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(point.table(0).sum(), 1.0);

  pair.p_plus = ScoreTable::Constant(1, 3, 1.0 / 3.0);
  pair.p_minus = ScoreTable::Constant(1, 3, 1.0 / 3.0);
  const auto dist = ProductDistribution(pair);
  EXPECT_NEAR((dist.table(0).array() - 1.0 / 9.0).abs().maxCoeff(), 0.0, 1e-16);
}

}  // namespace
}  // namespace preflab
