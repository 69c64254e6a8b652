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

// Bradley-Terry representability of conditional preference distributions and
// the positive/negative product construction that realizes a given score.

#ifndef PREFLAB_REPRESENTABILITY_H_
#define PREFLAB_REPRESENTABILITY_H_

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "preflab/item_set.h"
#include "preflab/tabular_distribution.h"

namespace preflab {

class ScoreModel;

// Per-context positive and negative response distributions together with the
// context marginal. Rows of p_plus / p_minus are contexts. The triplet law is
// P(x, y+, y-) = P_X(x) p_plus(x, y+) p_minus(x, y-).
struct ConditionalPair {
  ScoreTable p_plus;
  ScoreTable p_minus;
  Eigen::VectorXd context_marginal;

  int num_contexts() const { return static_cast<int>(p_plus.rows()); }
  int num_items() const { return static_cast<int>(p_plus.cols()); }
};

// Throws kInvalidArgument unless every row is a probability vector (1e-9) and
// shapes agree. Point masses are allowed; the finite-ratio requirement
// (p_minus > 0 wherever p_plus > 0) is enforced by ComputeImpliedScore.
void ValidatePair(const ConditionalPair& pair);

struct ViolatingCycle {
  int context = 0;
  // Items around the cycle in traversal order; the closing edge returns from
  // the last item to the first.
  std::vector<int> items;
  // Sum of log(omega(a,b) / omega(b,a)) around the cycle, oriented so that the
  // sum is nonnegative. Zero for every cycle of a BT-representable CPRD.
  double log_odds_sum = 0.0;
};

struct RepresentabilityVerdict {
  bool representable = false;
  // Per-context scores reproducing the CPRD; present iff representable. Each
  // connected component of a context's support graph is rooted at score 0.
  std::optional<ScoreTable> witness_scores;
  std::optional<ViolatingCycle> violating_cycle;
  // max over supported edges of |s_i - s_j - logodds_ij| / (1 + |logodds_ij|)
  // for the propagated scores. Reported either way.
  double max_edge_residual = 0.0;
};

inline constexpr double kDefaultRepresentabilityTolerance = 1e-9;

// Decides whether `cprd` is BT-representable. Scores are propagated along a
// BFS spanning forest of each context's support graph, then every supported
// edge is verified against its log-odds. Throws kInfiniteLogOdds when a
// supported pair has omega in {0, 1}.
RepresentabilityVerdict CheckBtRepresentable(
    const Cprd& cprd, double tol = kDefaultRepresentabilityTolerance);

// p_minus = mu normalized, p_plus proportional to mu * exp(score), per context.
// The context marginal is uniform. Throws kInvalidArgument if mu has a
// non-positive entry and kScoreRange if |score| > 700 anywhere.
ConditionalPair CiFactorize(const ScoreTable& score, const ScoreTable& mu);
ConditionalPair CiFactorize(const ScoreModel& model, const ItemSet& items,
                            const ScoreTable& mu);

struct ImpliedScore {
  // log(p_plus / p_minus); -infinity where p_plus == 0.
  ScoreTable scores;
  // Set where p_plus == 0 (the -infinity sentinel cells).
  BoolMatrix minus_infinity;
};

// Throws kUndefinedScore where p_plus > 0 but p_minus == 0.
ImpliedScore ComputeImpliedScore(const ConditionalPair& pair);

TabularTripletDistribution ProductDistribution(const ConditionalPair& pair);

}  // namespace preflab

#endif  // PREFLAB_REPRESENTABILITY_H_
