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

// Designing triplet distributions whose BT score is a chosen target, and
// sampling datasets from them.

#ifndef PREFLAB_DISTRIBUTION_DESIGN_H_
#define PREFLAB_DISTRIBUTION_DESIGN_H_

#include <cstdint>

#include <Eigen/Core>

#include "preflab/item_set.h"
#include "preflab/representability.h"
#include "preflab/triplets.h"

namespace preflab {

// p_plus(x, .) proportional to exp(target(x, .)) * p_minus(x, .), renormalized
// per context. Renormalizing shifts the implied score by a per-context
// constant, which leaves every margin and therefore the CPRD unchanged.
// An empty `context_marginal` means uniform.
//
// Throws kScoreRange when |target| > 700 and kInvalidArgument when a p_minus
// row is not a probability vector or has no positive entry.
ConditionalPair BtConsistentPair(const ScoreTable& target,
                                 const ScoreTable& p_minus,
                                 const Eigen::VectorXd& context_marginal = {});

ScoreTable UniformNegative(int contexts, int items);

// p_minus(x, y) proportional to exp(alpha * target(x, y)). alpha < 0 favors
// easy negatives, alpha > 0 hard ones, alpha = 0 is uniform.
ScoreTable AlphaNegative(const ScoreTable& target, double alpha);

// Replaces each row by -1 + 2 rank / m with ascending ranks 1..m. Ties are
// broken by item index, so the output always has adjacent gaps of exactly 2/m.
ScoreTable RankNormalize(const ScoreTable& scores);

ScoreTable ScaleScore(const ScoreTable& target, double beta);

inline constexpr int kMaxDiagonalRejections = 1000;

// n i.i.d. triplets: x from the context marginal, then (y+, y-) from
// p_plus x p_minus, redrawn jointly while y+ == y-. After
// kMaxDiagonalRejections consecutive ties the pair is drawn exactly from the
// off-diagonal conditional; kRejectionLimit is thrown only when that has no
// mass (p_plus and p_minus are the same point mass).
TripletDataset SampleTriplets(const ConditionalPair& pair, int n,
                              std::uint64_t seed);

}  // namespace preflab

#endif  // PREFLAB_DISTRIBUTION_DESIGN_H_
