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

#include "preflab/representability.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <fmt/format.h>

#include "preflab/errors.h"
#include "preflab/scorers.h"

namespace preflab {
namespace {

constexpr double kRowTolerance = 1e-9;
constexpr double kMaxAbsScore = 700.0;

double LogOdds(const Eigen::MatrixXd& omega, int i, int j) {
  return std::log(omega(i, j) / omega(j, i));
}

void CheckRows(const ScoreTable& p, const char* name) {
  if (!p.allFinite() || (p.array() < 0).any()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       fmt::format("{} has negative or non-finite entries", name));
  }
  for (int x = 0; x < p.rows(); ++x) {
    if (std::abs(p.row(x).sum() - 1.0) > kRowTolerance) {
      throw PreflabError(ErrorCode::kInvalidArgument,
                         fmt::format("{} row {} does not sum to 1", name, x));
    }
  }
}

void CheckScoreRange(const ScoreTable& score) {
  if (!score.allFinite() || score.cwiseAbs().maxCoeff() > kMaxAbsScore) {
    throw PreflabError(ErrorCode::kScoreRange,
                       "score magnitude exceeds 700; exp would overflow");
  }
}

// Spanning-forest state for one context.
struct Forest {
  Eigen::VectorXd score;
  std::vector<int> parent;
  std::vector<int> depth;
};

Forest Propagate(const Eigen::MatrixXd& omega, const BoolMatrix& support) {
  const int m = static_cast<int>(omega.rows());
  Forest forest{Eigen::VectorXd::Zero(m), std::vector<int>(m, -1),
                std::vector<int>(m, -1)};
  for (int root = 0; root < m; ++root) {
    if (forest.depth[root] >= 0) continue;
    forest.depth[root] = 0;
    std::deque<int> queue{root};
    while (!queue.empty()) {
      const int i = queue.front();
      queue.pop_front();
      for (int j = 0; j < m; ++j) {
        if (!support(i, j) || forest.depth[j] >= 0) continue;
        forest.depth[j] = forest.depth[i] + 1;
        forest.parent[j] = i;
        forest.score[j] = forest.score[i] - LogOdds(omega, i, j);
        queue.push_back(j);
      }
    }
  }
  return forest;
}

// The fundamental cycle closed by the non-tree edge (i, j).
std::vector<int> FundamentalCycle(const Forest& forest, int i, int j) {
  std::vector<int> from_i{i};
  std::vector<int> from_j{j};
  int a = i;
  int b = j;
  while (forest.depth[a] > forest.depth[b]) from_i.push_back(a = forest.parent[a]);
  while (forest.depth[b] > forest.depth[a]) from_j.push_back(b = forest.parent[b]);
  while (a != b) {
    from_i.push_back(a = forest.parent[a]);
    from_j.push_back(b = forest.parent[b]);
  }
  // from_j runs j .. lca, from_i runs i .. lca. The cycle is i, j, ..., lca,
  // ..., (child of lca toward i).
  std::vector<int> cycle{i};
  cycle.insert(cycle.end(), from_j.begin(), from_j.end());
  for (int k = static_cast<int>(from_i.size()) - 2; k >= 1; --k) {
    cycle.push_back(from_i[k]);
  }
  return cycle;
}

}  // namespace

void ValidatePair(const ConditionalPair& pair) {
  if (pair.p_plus.rows() != pair.p_minus.rows() ||
      pair.p_plus.cols() != pair.p_minus.cols() ||
      pair.context_marginal.size() != pair.p_plus.rows() ||
      pair.p_plus.cols() < 2) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "conditional pair shapes disagree");
  }
  CheckRows(pair.p_plus, "p_plus");
  CheckRows(pair.p_minus, "p_minus");
  if (!pair.context_marginal.allFinite() ||
      (pair.context_marginal.array() < 0).any() ||
      std::abs(pair.context_marginal.sum() - 1.0) > kRowTolerance) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "context marginal must be a probability vector");
  }
}

RepresentabilityVerdict CheckBtRepresentable(const Cprd& cprd, double tol) {
  const int contexts = cprd.num_contexts();
  const int m = cprd.num_items();
  for (int x = 0; x < contexts; ++x) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        if (!cprd.support[x](i, j)) continue;
        const double w = cprd.omega[x](i, j);
        if (!(w > 0.0 && w < 1.0)) {
          throw PreflabError(
              ErrorCode::kInfiniteLogOdds,
              fmt::format("context {} pair ({}, {}) is one-sided (omega = {})",
                          x, i, j, w));
        }
      }
    }
  }

  RepresentabilityVerdict verdict;
  ScoreTable scores(contexts, m);
  double worst = -1.0;
  int worst_context = -1, worst_i = -1, worst_j = -1;
  std::vector<Forest> forests;
  forests.reserve(contexts);
  for (int x = 0; x < contexts; ++x) {
    forests.push_back(Propagate(cprd.omega[x], cprd.support[x]));
    const Forest& forest = forests.back();
    scores.row(x) = forest.score.transpose();
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        if (!cprd.support[x](i, j)) continue;
        const double log_odds = LogOdds(cprd.omega[x], i, j);
        const double residual =
            std::abs(forest.score[i] - forest.score[j] - log_odds) /
            (1.0 + std::abs(log_odds));
        if (residual > worst) {
          worst = residual;
          worst_context = x;
          worst_i = i;
          worst_j = j;
        }
      }
    }
  }
  verdict.max_edge_residual = std::max(worst, 0.0);
  verdict.representable = verdict.max_edge_residual <= tol;
  if (verdict.representable) {
    verdict.witness_scores = std::move(scores);
    return verdict;
  }

  ViolatingCycle cycle;
  cycle.context = worst_context;
  cycle.items = FundamentalCycle(forests[worst_context], worst_i, worst_j);
  const Eigen::MatrixXd& omega = cprd.omega[worst_context];
  double sum = 0.0;
  for (size_t k = 0; k < cycle.items.size(); ++k) {
    sum += LogOdds(omega, cycle.items[k],
                   cycle.items[(k + 1) % cycle.items.size()]);
  }
  if (sum < 0.0) {
    std::reverse(cycle.items.begin(), cycle.items.end());
    sum = -sum;
  }
  cycle.log_odds_sum = sum;
  verdict.violating_cycle = std::move(cycle);
  return verdict;
}

ConditionalPair CiFactorize(const ScoreTable& score, const ScoreTable& mu) {
  if (score.rows() != mu.rows() || score.cols() != mu.cols()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "score and base measure shapes disagree");
  }
  if (!mu.allFinite() || (mu.array() <= 0).any()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "base measure must be strictly positive");
  }
  CheckScoreRange(score);
  ConditionalPair pair;
  pair.p_minus = mu;
  pair.p_plus = mu.array() * score.array().exp();
  for (int x = 0; x < mu.rows(); ++x) {
    pair.p_minus.row(x) /= pair.p_minus.row(x).sum();
    pair.p_plus.row(x) /= pair.p_plus.row(x).sum();
  }
  pair.context_marginal =
      Eigen::VectorXd::Constant(mu.rows(), 1.0 / static_cast<double>(mu.rows()));
  return pair;
}

ConditionalPair CiFactorize(const ScoreModel& model, const ItemSet& items,
                            const ScoreTable& mu) {
  return CiFactorize(ComputeScoreTable(model, items), mu);
}

ImpliedScore ComputeImpliedScore(const ConditionalPair& pair) {
  ValidatePair(pair);
  ImpliedScore out{ScoreTable(pair.p_plus.rows(), pair.p_plus.cols()),
                   BoolMatrix::Constant(pair.p_plus.rows(), pair.p_plus.cols(),
                                        false)};
  for (int x = 0; x < pair.p_plus.rows(); ++x) {
    for (int y = 0; y < pair.p_plus.cols(); ++y) {
      const double plus = pair.p_plus(x, y);
      const double minus = pair.p_minus(x, y);
      if (plus > 0.0 && minus <= 0.0) {
        throw PreflabError(
            ErrorCode::kUndefinedScore,
            fmt::format("p_plus > 0 but p_minus = 0 at ({}, {})", x, y));
      }
      if (plus <= 0.0) {
        out.scores(x, y) = -std::numeric_limits<double>::infinity();
        out.minus_infinity(x, y) = true;
      } else {
        out.scores(x, y) = std::log(plus) - std::log(minus);
      }
    }
  }
  return out;
}

TabularTripletDistribution ProductDistribution(const ConditionalPair& pair) {
  ValidatePair(pair);
  std::vector<Eigen::MatrixXd> tables;
  tables.reserve(pair.num_contexts());
  for (int x = 0; x < pair.num_contexts(); ++x) {
    tables.push_back(pair.p_plus.row(x).transpose() * pair.p_minus.row(x));
  }
  return TabularTripletDistribution(pair.context_marginal, std::move(tables));
}

}  // namespace preflab
