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
#include "preflab/evaluation.h"

namespace preflab {
namespace {

ScoreTable RandomScores(int contexts, int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ScoreTable s(contexts, m);
  for (int i = 0; i < s.size(); ++i) s.data()[i] = u(rng);
  return s;
}

TestDistributionQ RandomQ(int contexts, int m, std::mt19937_64& rng) {
  TestDistributionQ q;
  const auto cx = oracle::RandomSimplex(contexts, rng);
  q.context_marginal = Eigen::Map<const Eigen::VectorXd>(cx.data(), contexts);
  q.response.resize(contexts, m);
  for (int x = 0; x < contexts; ++x) {
    const auto v = oracle::RandomSimplex(m, rng);
    for (int y = 0; y < m; ++y) q.response(x, y) = v[y];
  }
  return q;
}

// Direct double sum with no shared code.
double OracleAccuracy(const ScoreTable& f, const ScoreTable& r,
                      const TestDistributionQ& q) {
  double hit = 0.0, total = 0.0;
  for (int x = 0; x < r.rows(); ++x) {
    for (int i = 0; i < r.cols(); ++i) {
      for (int j = 0; j < r.cols(); ++j) {
        const double a = r(x, i) - r(x, j);
        if (a == 0.0) continue;
        const double w =
            q.context_marginal[x] * q.response(x, i) * q.response(x, j);
        const double b = f(x, i) - f(x, j);
        total += w;
        if (a * b > 0.0) hit += w;
      }
    }
  }
  return hit / total;
}

TEST(AccuracyTest, IdentityReversalAndShift) {
  std::mt19937_64 rng(1);
  const ScoreTable r = RandomScores(3, 6, rng);
  const TestDistributionQ q = TestDistributionQ::Uniform(3, 6);
  EXPECT_DOUBLE_EQ(Accuracy(r, r, q), 1.0);
  EXPECT_DOUBLE_EQ(Accuracy(-r, r, q), 0.0);
  ScoreTable shifted = r;
  shifted.row(1).array() += 5.0;
  EXPECT_DOUBLE_EQ(Accuracy(shifted, r, q), 1.0);
  EXPECT_DOUBLE_EQ(EstimationError(shifted, r, q), 0.0);
}

TEST(AccuracyTest, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const ScoreTable r = RandomScores(2, 5, rng);
    const ScoreTable f = r + 0.8 * RandomScores(2, 5, rng);
    const TestDistributionQ q = RandomQ(2, 5, rng);
    EXPECT_NEAR(Accuracy(f, r, q), OracleAccuracy(f, r, q), 1e-12);
  }
}

TEST(AccuracyTest, ZeroFittedMarginIsIncorrect) {
  const ScoreTable r = (ScoreTable(1, 2) << 1.0, 0.0).finished();
  const ScoreTable f = ScoreTable::Zero(1, 2);
  EXPECT_DOUBLE_EQ(Accuracy(f, r, TestDistributionQ::Uniform(1, 2)), 0.0);
}

TEST(AccuracyTest, AllTiedThrows) {
  const ScoreTable r = ScoreTable::Zero(2, 3);
  try {
    Accuracy(r, r, TestDistributionQ::Uniform(2, 3));
    FAIL();
  } catch (const PreflabError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedAccuracy);
  }
}

TEST(EstimationErrorTest, TwoItems) {
  // Ordered pairs (0,1) and (1,0) each carry 1/4 and differ by 1 in margin;
  // diagonal pairs contribute zero.
  const ScoreTable r = (ScoreTable(1, 2) << 1.0, 0.0).finished();
  const ScoreTable f = ScoreTable::Zero(1, 2);
  EXPECT_DOUBLE_EQ(EstimationError(f, r, TestDistributionQ::Uniform(1, 2)),
                   0.5);
}

TEST(BottomFractionTest, SelectsSmallestMargins) {
  // Margins: |0-1|=1, |0-3|=3, |1-3|=2, each with equal mass on two ordered
  // pairs. The bottom third holds the |margin| = 1 pair only.
  const ScoreTable r = (ScoreTable(1, 3) << 0.0, 1.0, 3.0).finished();
  ScoreTable f = r;
  std::swap(f(0, 0), f(0, 1));
  const TestDistributionQ q = TestDistributionQ::Uniform(1, 3);
  EXPECT_DOUBLE_EQ(BottomFractionAccuracy(f, r, q, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(BottomFractionAccuracy(f, r, q, 1.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(BottomFractionAccuracy(r, r, q, 0.1), 1.0);
  EXPECT_THROW(BottomFractionAccuracy(f, r, q, 0.0), PreflabError);
  EXPECT_THROW(BottomFractionAccuracy(f, r, q, 1.5), PreflabError);
}

TEST(MisspecificationTest, SingleObservedPair) {
  // omega = 1/2 against a score margin of 1.
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(2, 2);
  t(0, 1) = 0.5;
  t(1, 0) = 0.5;
  const auto dist = TabularTripletDistribution::SingleContext(t);
  const ScoreTable s = (ScoreTable(1, 2) << 1.0, 0.0).finished();
  const double expected = std::pow(oracle::Sigmoid(1.0) - 0.5, 2);
  EXPECT_NEAR(MisspecificationError(s, dist), expected, 1e-15);
  EXPECT_NEAR(expected, 0.0534, 1e-4);
}

TEST(MisspecificationTest, MatchesBruteForceAndVanishesForBt) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 4;
    std::vector<Eigen::MatrixXd> tables;
    for (int x = 0; x < 2; ++x) {
      const auto v = oracle::RandomSimplex(m * m, rng);
      tables.push_back(Eigen::Map<const Eigen::MatrixXd>(v.data(), m, m));
    }
    const TabularTripletDistribution dist(Eigen::Vector2d(0.3, 0.7), tables);
    const ScoreTable s = RandomScores(2, m, rng);
    double num = 0.0, den = 0.0;
    for (int x = 0; x < 2; ++x) {
      for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
          const double a = dist.Joint(x, i, j), b = dist.Joint(x, j, i);
          const double omega = a / (a + b);
          num += (a + b) *
                 std::pow(omega - oracle::Sigmoid(s(x, i) - s(x, j)), 2);
          den += a + b;
        }
      }
    }
    EXPECT_NEAR(MisspecificationError(s, dist), num / den, 1e-12);

    const ConditionalPair pair = BtConsistentPair(s, UniformNegative(2, m));
    EXPECT_NEAR(MisspecificationError(s, ProductDistribution(pair)), 0.0,
                1e-24);
  }
}

TEST(LowerBoundTest, PredicateCases) {
  EXPECT_TRUE(MarginWithinBound(1.0, 0.5));
  EXPECT_TRUE(MarginWithinBound(-1.0, -2.0));
  EXPECT_FALSE(MarginWithinBound(1.0, 0.0));
  EXPECT_FALSE(MarginWithinBound(0.0, 0.0));
  EXPECT_FALSE(MarginWithinBound(1.0, -0.1));
  EXPECT_FALSE(MarginWithinBound(1.0, 2.5));
}

TEST(LowerBoundTest, PredicateImpliesSameSignFuzz) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int premises = 0;
  for (int k = 0; k < 1000000; ++k) {
    const double a = u(rng);
    const double b = k % 7 == 0 ? 2.0 * a : u(rng);
    if (MarginWithinBound(a, b)) {
      ++premises;
      ASSERT_TRUE(a * b > 0.0) << a << " " << b;
    }
  }
  EXPECT_GT(premises, 100000);
}

TEST(LowerBoundTest, NeverExceedsAccuracy) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const ScoreTable r = RandomScores(2, 6, rng);
    const ScoreTable f = r + RandomScores(2, 6, rng);
    const TestDistributionQ q = RandomQ(2, 6, rng);
    EXPECT_LE(AccuracyLowerBound(f, r, q), Accuracy(f, r, q) + 1e-15);
  }
}

TEST(HistogramTest, RankNormalizedMinimumMargin) {
  std::mt19937_64 rng(6);
  const ScoreTable r = RankNormalize(RandomScores(2, 16, rng));
  const MarginHistogram h =
      ComputeMarginHistogram(r, TestDistributionQ::Uniform(2, 16), 10);
  EXPECT_NEAR(h.min_nonzero, 0.125, 1e-12);
  ASSERT_EQ(h.edges.size(), 11u);
  ASSERT_EQ(h.mass.size(), 10u);
  EXPECT_DOUBLE_EQ(h.edges.front(), 0.0);
  EXPECT_NEAR(h.edges.back(), 1.875, 1e-12);
  double total = 0.0;
  for (double v : h.mass) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(h.survival.front(), 1.0);
  // The first edge (0.1875) excludes the diagonal (1/16 of the mass) and the
  // 30 ordered adjacent-rank pairs at margin 0.125.
  EXPECT_NEAR(h.survival[1], 1.0 - 1.0 / 16.0 - 30.0 / 256.0, 1e-12);
}

TEST(HistogramTest, AllZeroMargins) {
  const MarginHistogram h = ComputeMarginHistogram(
      ScoreTable::Zero(1, 4), TestDistributionQ::Uniform(1, 4), 4);
  EXPECT_DOUBLE_EQ(h.edges.back(), 1.0);
  EXPECT_DOUBLE_EQ(h.mass.front(), 1.0);
  EXPECT_DOUBLE_EQ(h.min_nonzero, 0.0);
}

TEST(EvaluateTest, BundlesMetrics) {
  std::mt19937_64 rng(7);
  const ScoreTable r = RandomScores(3, 8, rng);
  const ScoreTable f = r + 0.5 * RandomScores(3, 8, rng);
  const TestDistributionQ q = TestDistributionQ::Uniform(3, 8);
  const EvaluationMetrics metrics = Evaluate(f, r, q);
  EXPECT_DOUBLE_EQ(metrics.accuracy, Accuracy(f, r, q));
  EXPECT_DOUBLE_EQ(metrics.acc_bottom10, BottomFractionAccuracy(f, r, q, 0.1));
  EXPECT_DOUBLE_EQ(metrics.acc_bottom30, BottomFractionAccuracy(f, r, q, 0.3));
  EXPECT_DOUBLE_EQ(metrics.estimation_error, EstimationError(f, r, q));
  EXPECT_LE(metrics.accuracy_lower_bound, metrics.accuracy);
}

}  // namespace
}  // namespace preflab
