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

#include "preflab/distribution_design.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "preflab/errors.h"
#include "preflab/rng.h"

namespace preflab {

ConditionalPair BtConsistentPair(const ScoreTable& target,
                                 const ScoreTable& p_minus,
                                 const Eigen::VectorXd& context_marginal) {
  if (target.rows() != p_minus.rows() || target.cols() != p_minus.cols()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "target and p_minus shapes disagree");
  }
  if (!target.allFinite() || target.cwiseAbs().maxCoeff() > 700.0) {
    throw PreflabError(ErrorCode::kScoreRange,
                       "target score magnitude exceeds 700");
  }
  const int contexts = static_cast<int>(target.rows());
  ConditionalPair pair;
  pair.p_minus = p_minus;
  pair.p_plus = p_minus.array() * target.array().exp();
  for (int x = 0; x < contexts; ++x) {
    const double total = pair.p_plus.row(x).sum();
    if (!(total > 0.0)) {
      throw PreflabError(ErrorCode::kInvalidArgument,
                         fmt::format("p_minus row {} has no positive mass", x));
    }
    pair.p_plus.row(x) /= total;
  }
  pair.context_marginal =
      context_marginal.size() == 0
          ? Eigen::VectorXd::Constant(contexts, 1.0 / contexts)
          : context_marginal;
  ValidatePair(pair);
  return pair;
}

ScoreTable UniformNegative(int contexts, int items) {
  return ScoreTable::Constant(contexts, items, 1.0 / items);
}

ScoreTable AlphaNegative(const ScoreTable& target, double alpha) {
  if (!std::isfinite(alpha)) {
    throw PreflabError(ErrorCode::kInvalidArgument, "alpha must be finite");
  }
  ScoreTable out = alpha * target;
  for (int x = 0; x < out.rows(); ++x) {
    out.row(x).array() -= out.row(x).maxCoeff();
    out.row(x) = out.row(x).array().exp().matrix();
    out.row(x) /= out.row(x).sum();
  }
  return out;
}

ScoreTable RankNormalize(const ScoreTable& scores) {
  const int m = static_cast<int>(scores.cols());
  ScoreTable out(scores.rows(), m);
  std::vector<int> order(m);
  for (int x = 0; x < scores.rows(); ++x) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return scores(x, a) < scores(x, b);
    });
    for (int rank = 1; rank <= m; ++rank) {
      out(x, order[rank - 1]) = -1.0 + 2.0 * rank / m;
    }
  }
  return out;
}

ScoreTable ScaleScore(const ScoreTable& target, double beta) {
  if (!std::isfinite(beta)) {
    throw PreflabError(ErrorCode::kInvalidArgument, "beta must be finite");
  }
  return beta * target;
}

namespace {

// Exact draw from p_plus x p_minus restricted to pos != neg. Used once
// rejection has stalled on a nearly tied context.
bool DrawOffDiagonal(const Eigen::VectorXd& p_plus,
                     const Eigen::VectorXd& p_minus, Rng& rng, int* pos,
                     int* neg) {
  const int m = static_cast<int>(p_plus.size());
  Eigen::VectorXd pos_weight(m);
  for (int i = 0; i < m; ++i) {
    double others = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j != i) others += p_minus[j];
    }
    pos_weight[i] = p_plus[i] * others;
  }
  if (!(pos_weight.sum() > 0.0)) return false;
  *pos = SampleIndex(pos_weight / pos_weight.sum(), rng);
  Eigen::VectorXd neg_weight = p_minus;
  neg_weight[*pos] = 0.0;
  *neg = SampleIndex(neg_weight / neg_weight.sum(), rng);
  return true;
}

}  // namespace

TripletDataset SampleTriplets(const ConditionalPair& pair, int n,
                              std::uint64_t seed) {
  if (n < 1) {
    throw PreflabError(ErrorCode::kInvalidArgument, "need n >= 1 triplets");
  }
  ValidatePair(pair);
  Rng rng(DeriveSeed(seed, {StreamLabel("sample_triplets")}));
  TripletDataset data;
  data.seed = seed;
  data.triplets.reserve(n);
  for (int k = 0; k < n; ++k) {
    const int x = SampleIndex(pair.context_marginal, rng);
    int rejections = 0;
    while (true) {
      const int pos = SampleIndex(pair.p_plus.row(x).transpose(), rng);
      const int neg = SampleIndex(pair.p_minus.row(x).transpose(), rng);
      if (pos != neg) {
        data.triplets.push_back({x, pos, neg});
        break;
      }
      if (++rejections >= kMaxDiagonalRejections) {
        int p, q;
        if (!DrawOffDiagonal(pair.p_plus.row(x).transpose(),
                             pair.p_minus.row(x).transpose(), rng, &p, &q)) {
          throw PreflabError(
              ErrorCode::kRejectionLimit,
              fmt::format("context {}: {} consecutive tied draws and no "
                          "off-diagonal mass",
                          x, kMaxDiagonalRejections));
        }
        data.triplets.push_back({x, p, q});
        break;
      }
    }
  }
  return data;
}

}  // namespace preflab
