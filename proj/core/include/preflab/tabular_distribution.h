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

#ifndef PREFLAB_TABULAR_DISTRIBUTION_H_
#define PREFLAB_TABULAR_DISTRIBUTION_H_

#include <vector>

#include <Eigen/Core>

#include "preflab/triplets.h"

namespace preflab {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Exact distribution over (context, preferred item, rejected item) triplets.
//
// Stored as a context marginal P_X plus, for every context x, the conditional
// table T_x with T_x(i, j) = P(y+ = i, y- = j | x). Contexts that carry no
// marginal mass may have an all-zero table; every other table sums to one.
// Diagonal cells are permitted. They carry no preference information and are
// ignored by the CPRD.
class TabularTripletDistribution {
 public:
  // Throws kInvalidArgument if shapes disagree, any entry is negative or not
  // finite, or a normalization constraint fails by more than 1e-9.
  TabularTripletDistribution(Eigen::VectorXd context_marginal,
                             std::vector<Eigen::MatrixXd> tables);

  // Single-context convenience constructor.
  static TabularTripletDistribution SingleContext(Eigen::MatrixXd table);

  int num_contexts() const { return static_cast<int>(tables_.size()); }
  int num_items() const { return static_cast<int>(tables_.front().rows()); }
  const Eigen::VectorXd& context_marginal() const { return context_marginal_; }
  const std::vector<Eigen::MatrixXd>& tables() const { return tables_; }
  const Eigen::MatrixXd& table(int x) const { return tables_[x]; }

  // Joint probability P(x, i, j).
  double Joint(int x, int i, int j) const {
    return context_marginal_[x] * tables_[x](i, j);
  }
  // Total joint mass on diagonal cells.
  double DiagonalMass() const;
  // Same distribution with every T_x transposed (preferences reversed).
  TabularTripletDistribution Transposed() const;

 private:
  Eigen::VectorXd context_marginal_;
  std::vector<Eigen::MatrixXd> tables_;
};

// Distribution over (context, unordered pair). weights[x](i, j) for i < j is
// P_X(x) (T_x(i,j) + T_x(j,i)) / normalizer; all other cells are zero. The
// normalizer is the total off-diagonal joint mass.
struct ComparisonDistribution {
  std::vector<Eigen::MatrixXd> weights;
  double normalizer = 0.0;

  int num_contexts() const { return static_cast<int>(weights.size()); }
  int num_items() const { return static_cast<int>(weights.front().rows()); }
  // Symmetric copy of weights[x] (both triangles filled).
  Eigen::MatrixXd Symmetric(int x) const;
};

// Conditional preference distribution. omega[x](i, j) is the probability that
// i is preferred to j given context x and the unordered pair {i, j}; it is
// meaningful only where support[x](i, j) is set.
struct Cprd {
  std::vector<Eigen::MatrixXd> omega;
  std::vector<BoolMatrix> support;

  int num_contexts() const { return static_cast<int>(omega.size()); }
  int num_items() const { return static_cast<int>(omega.front().rows()); }
};

// omega(i,j) = T(i,j) / (T(i,j) + T(j,i)) wherever the denominator is positive
// and i != j. Unsupported cells hold 0.5 and are masked out.
Cprd CprdFromDistribution(const TabularTripletDistribution& dist);

// Throws kDegenerateDistribution if all mass lies on the diagonal.
ComparisonDistribution MakeComparisonDistribution(
    const TabularTripletDistribution& dist);

// Frequency table of `data` over `m` contexts and `m` items. This is also the
// maximum likelihood estimate of the saturated (fully tabular) generative
// model. Contexts that never occur get marginal 0 and an all-zero table.
TabularTripletDistribution EmpiricalDistribution(const TripletDataset& data,
                                                 int m);

Cprd CprdFromCounts(const TripletDataset& data, int m);

}  // namespace preflab

#endif  // PREFLAB_TABULAR_DISTRIBUTION_H_
