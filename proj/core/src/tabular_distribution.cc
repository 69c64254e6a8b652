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

#include "preflab/tabular_distribution.h"

#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "preflab/errors.h"

namespace preflab {
namespace {

constexpr double kNormalizationTolerance = 1e-9;

}  // namespace

TabularTripletDistribution::TabularTripletDistribution(
    Eigen::VectorXd context_marginal, std::vector<Eigen::MatrixXd> tables)
    : context_marginal_(std::move(context_marginal)),
      tables_(std::move(tables)) {
  if (tables_.empty() || context_marginal_.size() != tables_.size()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "distribution needs one table per context");
  }
  const auto m = tables_.front().rows();
  if (m < 2) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "distribution needs at least two items");
  }
  if (!context_marginal_.allFinite() || (context_marginal_.array() < 0).any() ||
      std::abs(context_marginal_.sum() - 1.0) > kNormalizationTolerance) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "context marginal must be a probability vector");
  }
  for (size_t x = 0; x < tables_.size(); ++x) {
    const Eigen::MatrixXd& t = tables_[x];
    if (t.rows() != m || t.cols() != m) {
      throw PreflabError(ErrorCode::kInvalidArgument,
                         fmt::format("table {} is not {}x{}", x, m, m));
    }
    if (!t.allFinite() || (t.array() < 0).any()) {
      throw PreflabError(
          ErrorCode::kInvalidArgument,
          fmt::format("table {} has negative or non-finite entries", x));
    }
    const double total = t.sum();
    const bool empty_context = context_marginal_[x] == 0.0 && total == 0.0;
    if (!empty_context && std::abs(total - 1.0) > kNormalizationTolerance) {
      throw PreflabError(ErrorCode::kInvalidArgument,
                         fmt::format("table {} sums to {}, not 1", x, total));
    }
  }
}

TabularTripletDistribution TabularTripletDistribution::SingleContext(
    Eigen::MatrixXd table) {
  return TabularTripletDistribution(Eigen::VectorXd::Ones(1), {std::move(table)});
}

double TabularTripletDistribution::DiagonalMass() const {
  double mass = 0.0;
  for (int x = 0; x < num_contexts(); ++x) {
    mass += context_marginal_[x] * tables_[x].diagonal().sum();
  }
  return mass;
}

TabularTripletDistribution TabularTripletDistribution::Transposed() const {
  std::vector<Eigen::MatrixXd> flipped;
  flipped.reserve(tables_.size());
  for (const auto& t : tables_) flipped.push_back(t.transpose());
  return TabularTripletDistribution(context_marginal_, std::move(flipped));
}

Eigen::MatrixXd ComparisonDistribution::Symmetric(int x) const {
  const Eigen::MatrixXd& w = weights[x];
  return w + w.transpose();
}

Cprd CprdFromDistribution(const TabularTripletDistribution& dist) {
  const int m = dist.num_items();
  Cprd cprd;
  cprd.omega.reserve(dist.num_contexts());
  cprd.support.reserve(dist.num_contexts());
  for (const Eigen::MatrixXd& t : dist.tables()) {
    Eigen::MatrixXd omega = Eigen::MatrixXd::Constant(m, m, 0.5);
    BoolMatrix support = BoolMatrix::Constant(m, m, false);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        if (i == j) continue;
        const double both = t(i, j) + t(j, i);
        if (both > 0.0) {
          omega(i, j) = t(i, j) / both;
          support(i, j) = true;
        }
      }
    }
    cprd.omega.push_back(std::move(omega));
    cprd.support.push_back(std::move(support));
  }
  return cprd;
}

ComparisonDistribution MakeComparisonDistribution(
    const TabularTripletDistribution& dist) {
  const int m = dist.num_items();
  ComparisonDistribution out;
  out.weights.assign(dist.num_contexts(), Eigen::MatrixXd::Zero(m, m));
  double total = 0.0;
  for (int x = 0; x < dist.num_contexts(); ++x) {
    const double px = dist.context_marginal()[x];
    const Eigen::MatrixXd& t = dist.table(x);
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const double mass = px * (t(i, j) + t(j, i));
        out.weights[x](i, j) = mass;
        total += mass;
      }
    }
  }
  if (!(total > 0.0)) {
    throw PreflabError(ErrorCode::kDegenerateDistribution,
                       "all triplet mass lies on the diagonal");
  }
  for (auto& w : out.weights) w /= total;
  out.normalizer = total;
  return out;
}

TabularTripletDistribution EmpiricalDistribution(const TripletDataset& data,
                                                 int m) {
  ValidateDataset(data, m, m);
  std::vector<Eigen::MatrixXd> counts(m, Eigen::MatrixXd::Zero(m, m));
  Eigen::VectorXd context_counts = Eigen::VectorXd::Zero(m);
  for (const Triplet& t : data.triplets) {
    counts[t.context](t.pos, t.neg) += 1.0;
    context_counts[t.context] += 1.0;
  }
  for (int x = 0; x < m; ++x) {
    if (context_counts[x] > 0) counts[x] /= context_counts[x];
  }
  return TabularTripletDistribution(context_counts / data.triplets.size(),
                                    std::move(counts));
}

Cprd CprdFromCounts(const TripletDataset& data, int m) {
  return CprdFromDistribution(EmpiricalDistribution(data, m));
}

}  // namespace preflab
