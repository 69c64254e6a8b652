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

#include "preflab/evaluation.h"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "preflab/errors.h"
#include "preflab/training.h"

namespace preflab {
namespace {

struct PairTerm {
  int x;
  int i;
  int j;
  double weight;
  double target_margin;
  double fitted_margin;
};

void CheckShapes(const ScoreTable& fitted, const ScoreTable& target,
                 const TestDistributionQ& q) {
  ValidateQ(q);
  if (fitted.rows() != target.rows() || fitted.cols() != target.cols() ||
      target.rows() != q.num_contexts() || target.cols() != q.num_items()) {
    throw PreflabError(
        ErrorCode::kInvalidArgument,
        fmt::format("score shapes {}x{} / {}x{} do not match Q {}x{}",
                    fitted.rows(), fitted.cols(), target.rows(),
                    target.cols(), q.num_contexts(), q.num_items()));
  }
}

// Ordered distinct pairs with positive Q mass and a nonzero target margin.
std::vector<PairTerm> NonTiedPairs(const ScoreTable& fitted,
                                   const ScoreTable& target,
                                   const TestDistributionQ& q) {
  CheckShapes(fitted, target, q);
  std::vector<PairTerm> out;
  const int m = static_cast<int>(target.cols());
  for (int x = 0; x < target.rows(); ++x) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        if (i == j) continue;
        const double w =
            q.context_marginal[x] * q.response(x, i) * q.response(x, j);
        const double dt = target(x, i) - target(x, j);
        if (w <= 0.0 || dt == 0.0) continue;
        out.push_back({x, i, j, w, dt, fitted(x, i) - fitted(x, j)});
      }
    }
  }
  if (out.empty()) {
    throw PreflabError(ErrorCode::kUndefinedAccuracy,
                       "every pair with Q mass is tied under the target");
  }
  return out;
}

double AccuracyOf(const std::vector<PairTerm>& pairs, std::size_t count) {
  double hit = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    total += pairs[k].weight;
    if (SameStrictSign(pairs[k].target_margin, pairs[k].fitted_margin)) {
      hit += pairs[k].weight;
    }
  }
  return hit / total;
}

}  // namespace

bool SameStrictSign(double a, double b) {
  return (a > 0.0 && b > 0.0) || (a < 0.0 && b < 0.0);
}

bool MarginWithinBound(double target_margin, double fitted_margin) {
  return target_margin != 0.0 && fitted_margin != 0.0 &&
         std::abs(fitted_margin - target_margin) <= std::abs(target_margin);
}

double Accuracy(const ScoreTable& fitted, const ScoreTable& target,
                const TestDistributionQ& q) {
  const std::vector<PairTerm> pairs = NonTiedPairs(fitted, target, q);
  return AccuracyOf(pairs, pairs.size());
}

double BottomFractionAccuracy(const ScoreTable& fitted,
                              const ScoreTable& target,
                              const TestDistributionQ& q, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "fraction must lie in (0, 1]");
  }
  std::vector<PairTerm> pairs = NonTiedPairs(fitted, target, q);
  const auto key = [](const PairTerm& p) {
    return std::make_tuple(std::abs(p.target_margin), p.x, std::min(p.i, p.j),
                           std::max(p.i, p.j), p.i);
  };
  std::sort(pairs.begin(), pairs.end(),
            [&](const PairTerm& a, const PairTerm& b) { return key(a) < key(b); });
  double total = 0.0;
  for (const PairTerm& p : pairs) total += p.weight;
  const double budget = fraction * total;
  std::size_t count = 0;
  double taken = 0.0;
  while (count < pairs.size() && taken < budget) {
    taken += pairs[count].weight;
    ++count;
  }
  if (count == 0) {
    throw PreflabError(ErrorCode::kEmptySubset, "bottom-fraction subset is empty");
  }
  return AccuracyOf(pairs, count);
}

double EstimationError(const ScoreTable& fitted, const ScoreTable& target,
                       const TestDistributionQ& q) {
  CheckShapes(fitted, target, q);
  const ScoreTable diff = fitted - target;
  const int m = static_cast<int>(target.cols());
  double total = 0.0;
  for (int x = 0; x < diff.rows(); ++x) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const double e = diff(x, i) - diff(x, j);
        total += q.context_marginal[x] * q.response(x, i) * q.response(x, j) *
                 e * e;
      }
    }
  }
  return total;
}

double MisspecificationError(const ScoreTable& scores,
                             const TabularTripletDistribution& dist) {
  if (scores.rows() != dist.num_contexts() ||
      scores.cols() != dist.num_items()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "score table does not match the distribution");
  }
  const ComparisonDistribution comparison = MakeComparisonDistribution(dist);
  const Cprd cprd = CprdFromDistribution(dist);
  const int m = dist.num_items();
  double total = 0.0;
  for (int x = 0; x < dist.num_contexts(); ++x) {
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const double w = comparison.weights[x](i, j);
        if (w == 0.0) continue;
        const double e =
            cprd.omega[x](i, j) - Sigmoid(scores(x, i) - scores(x, j));
        total += w * e * e;
      }
    }
  }
  return total;
}

double MisspecificationError(const ScoreModel& model, const ItemSet* items,
                             const TabularTripletDistribution& dist) {
  return MisspecificationError(ComputeScoreTable(model, items), dist);
}

double AccuracyLowerBound(const ScoreTable& fitted, const ScoreTable& target,
                          const TestDistributionQ& q) {
  const std::vector<PairTerm> pairs = NonTiedPairs(fitted, target, q);
  double hit = 0.0;
  double total = 0.0;
  for (const PairTerm& p : pairs) {
    total += p.weight;
    if (MarginWithinBound(p.target_margin, p.fitted_margin)) hit += p.weight;
  }
  return hit / total;
}

MarginHistogram ComputeMarginHistogram(const ScoreTable& target,
                                       const TestDistributionQ& q, int bins) {
  if (bins < 1) {
    throw PreflabError(ErrorCode::kInvalidArgument, "need at least one bin");
  }
  CheckShapes(target, target, q);
  const int m = static_cast<int>(target.cols());
  std::vector<std::pair<double, double>> margins;  // (|margin|, weight)
  double largest = 0.0;
  for (int x = 0; x < target.rows(); ++x) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const double w =
            q.context_marginal[x] * q.response(x, i) * q.response(x, j);
        const double a = std::abs(target(x, i) - target(x, j));
        margins.emplace_back(a, w);
        if (w > 0.0) largest = std::max(largest, a);
      }
    }
  }
  MarginHistogram hist;
  const double upper = largest > 0.0 ? largest : 1.0;
  for (int b = 0; b <= bins; ++b) hist.edges.push_back(upper * b / bins);
  hist.mass.assign(bins, 0.0);
  hist.survival.assign(bins + 1, 0.0);
  double min_nonzero = 0.0;
  for (const auto& [a, w] : margins) {
    if (w <= 0.0) continue;
    const int bin = std::min(bins - 1, static_cast<int>(a / upper * bins));
    hist.mass[bin] += w;
    for (int e = 0; e <= bins; ++e) {
      if (a >= hist.edges[e]) hist.survival[e] += w;
    }
    if (a > 0.0 && (min_nonzero == 0.0 || a < min_nonzero)) min_nonzero = a;
  }
  hist.min_nonzero = min_nonzero;
  return hist;
}

EvaluationMetrics Evaluate(const ScoreTable& fitted, const ScoreTable& target,
                           const TestDistributionQ& q) {
  EvaluationMetrics metrics;
  metrics.accuracy = Accuracy(fitted, target, q);
  metrics.acc_bottom10 = BottomFractionAccuracy(fitted, target, q, 0.1);
  metrics.acc_bottom30 = BottomFractionAccuracy(fitted, target, q, 0.3);
  metrics.estimation_error = EstimationError(fitted, target, q);
  metrics.accuracy_lower_bound = AccuracyLowerBound(fitted, target, q);
  return metrics;
}

}  // namespace preflab
