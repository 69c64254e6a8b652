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

// Exact evaluation of a fitted score against a target under Q_pair: a context
// x ~ Q_x and two responses drawn iid from Q_y(. | x). All expectations are
// double sums over ordered pairs; nothing is sampled.
//
// Ordered pairs with a zero target margin carry no order to recover and are
// excluded from accuracy-type metrics. A zero fitted margin on a non-tied
// pair counts as incorrect.

#ifndef PREFLAB_EVALUATION_H_
#define PREFLAB_EVALUATION_H_

#include <vector>

#include "preflab/connectivity.h"
#include "preflab/item_set.h"
#include "preflab/scorers.h"
#include "preflab/tabular_distribution.h"

namespace preflab {

// Pr_{Q_pair}[sign(fitted margin) == sign(target margin)] over non-tied
// pairs. Throws kUndefinedAccuracy if every pair with Q mass is tied.
double Accuracy(const ScoreTable& fitted, const ScoreTable& target,
                const TestDistributionQ& q);

// Accuracy restricted to the smallest-|target margin| pairs holding a
// `fraction` share of the non-tied Q_pair mass. Pairs are ranked by
// (|margin|, context, unordered pair) and included while the mass taken so
// far is below fraction * total, so at least one pair is always included.
double BottomFractionAccuracy(const ScoreTable& fitted,
                              const ScoreTable& target,
                              const TestDistributionQ& q, double fraction);

// E_{Q_pair}[(fitted margin - target margin)^2], including y == y'.
double EstimationError(const ScoreTable& fitted, const ScoreTable& target,
                       const TestDistributionQ& q);

// E_{comparison}[(omega - sigma(score margin))^2] over the unordered pairs of
// the distribution's comparison weights.
double MisspecificationError(const ScoreTable& scores,
                             const TabularTripletDistribution& dist);
double MisspecificationError(const ScoreModel& model, const ItemSet* items,
                             const TabularTripletDistribution& dist);

// Premise of the order-preservation bound: a != 0, b != 0 and
// |b - a| <= |a|. (At b == 0 the unguarded premise holds with equality yet
// the signs differ, so b == 0 is excluded.)
bool MarginWithinBound(double target_margin, double fitted_margin);
// sign(a) == sign(b) with strict signs.
bool SameStrictSign(double a, double b);

// Pr_{Q_pair}[MarginWithinBound] over non-tied pairs. Never exceeds Accuracy.
double AccuracyLowerBound(const ScoreTable& fitted, const ScoreTable& target,
                          const TestDistributionQ& q);

struct MarginHistogram {
  std::vector<double> edges;     // bins + 1 ascending edges from 0
  std::vector<double> mass;      // Q_pair mass per bin; last bin is closed
  std::vector<double> survival;  // Pr(|margin| >= edge) for each edge
  double min_nonzero = 0.0;      // smallest nonzero |margin| with mass
};

// Histogram of |target margin| over all ordered pairs (including y == y')
// weighted by Q_pair. The upper edge is the largest margin, or 1 when every
// margin is zero.
MarginHistogram ComputeMarginHistogram(const ScoreTable& target,
                                       const TestDistributionQ& q, int bins);

struct EvaluationMetrics {
  double accuracy = 0.0;
  double acc_bottom10 = 0.0;
  double acc_bottom30 = 0.0;
  double estimation_error = 0.0;
  double accuracy_lower_bound = 0.0;
};

EvaluationMetrics Evaluate(const ScoreTable& fitted, const ScoreTable& target,
                           const TestDistributionQ& q);

}  // namespace preflab

#endif  // PREFLAB_EVALUATION_H_
