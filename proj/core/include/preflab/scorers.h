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

// Score functions r(x, y) over a finite item set and their exact parameter
// gradients.
//
// Three hypothesis classes share one flat parameter vector representation:
//
//   tabular     r(x, y) = theta[x * items + y]
//   linear      r(x, y) = w . phi(x, y)
//   cosine_mlp  r(x, y) = cos(f(x), f(y)),  f(v) = W2 relu(W1 v + b1) + b2
//
// Every evaluation path goes through a full score table (contexts x items),
// which is cheap because the universe is small, and every gradient is the
// reverse-mode pullback of an upstream gradient on that table.

#ifndef PREFLAB_SCORERS_H_
#define PREFLAB_SCORERS_H_

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "preflab/item_set.h"

namespace preflab {

enum class ScoreKind { kTabular, kLinear, kCosineMlp };

std::string_view ScoreKindName(ScoreKind kind);
// Accepts "tabular", "linear", "cosine_mlp". Throws kInvalidArgument.
ScoreKind ParseScoreKind(std::string_view name);

// Shape metadata. Only the fields relevant to the kind are read.
struct ModelDims {
  int contexts = 0;  // tabular
  int items = 0;     // tabular
  int features = 0;  // linear
  int input = 0;     // cosine_mlp
  int hidden = 0;    // cosine_mlp
  int embed = 0;     // cosine_mlp

  static ModelDims Tabular(int contexts, int items) {
    return {.contexts = contexts, .items = items};
  }
  static ModelDims Linear(int features) { return {.features = features}; }
  static ModelDims CosineMlp(int input, int hidden, int embed) {
    return {.input = input, .hidden = hidden, .embed = embed};
  }
};

// phi(x, y) for every context/item pair; features[x] is items x dim.
struct FeatureTable {
  std::vector<Eigen::MatrixXd> features;

  int num_contexts() const { return static_cast<int>(features.size()); }
  int num_items() const { return static_cast<int>(features.front().rows()); }
  int dim() const { return static_cast<int>(features.front().cols()); }
  Eigen::VectorXd At(int x, int y) const {
    return features[x].row(y).transpose();
  }
};

// phi(x, y) = [x; y], the default linear feature map on an item set.
FeatureTable ConcatFeatures(const ItemSet& items);

// Subtracts the weighted per-context mean: phi(x, y) - sum_y' w(x, y') phi(x, y').
// `weights` rows must sum to one.
FeatureTable CenterFeatures(const FeatureTable& table, const ScoreTable& weights);

// The tabular class written as a linear class: phi(x, y) = B^T e_y where the
// columns of B are an orthonormal basis of the sum-zero subspace of R^items.
// The result is centered under the uniform response distribution.
FeatureTable CenteredIndicatorFeatures(int contexts, int items);

class ScoreModel {
 public:
  // Throws kInvalidArgument if the parameter count does not match `dims` or a
  // parameter is not finite.
  ScoreModel(ScoreKind kind, ModelDims dims, Eigen::VectorXd params,
             std::uint64_t seed = 0);

  ScoreKind kind() const { return kind_; }
  const ModelDims& dims() const { return dims_; }
  std::uint64_t seed() const { return seed_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& mutable_params() { return params_; }
  int num_params() const { return static_cast<int>(params_.size()); }

  // Linear models use the attached features when present and ConcatFeatures
  // of the item set otherwise.
  void set_features(std::shared_ptr<const FeatureTable> features) {
    features_ = std::move(features);
  }
  const FeatureTable* features() const { return features_.get(); }

  static int ParamCount(ScoreKind kind, const ModelDims& dims);

 private:
  ScoreKind kind_;
  ModelDims dims_;
  Eigen::VectorXd params_;
  std::uint64_t seed_;
  std::shared_ptr<const FeatureTable> features_;
};

inline constexpr double kCosineEpsilon = 1e-12;

// Deterministic in `seed`. Tabular and linear start at zero; MLP weights are
// N(0, 1/fan_in) and biases zero.
ScoreModel InitModel(ScoreKind kind, const ModelDims& dims, std::uint64_t seed);

// Intermediate values of a cosine-MLP forward pass over all items.
struct MlpActivations {
  Eigen::MatrixXd pre;        // items x hidden
  Eigen::MatrixXd hidden;     // items x hidden, relu(pre)
  Eigen::MatrixXd embedding;  // items x embed
};

MlpActivations MlpForward(const ScoreModel& model, const ItemSet& items);

// `items` may be null for tabular models and for linear models with attached
// features; it is required otherwise (kInvalidArgument).
ScoreTable ComputeScoreTable(const ScoreModel& model, const ItemSet* items);
inline ScoreTable ComputeScoreTable(const ScoreModel& model,
                                    const ItemSet& items) {
  return ComputeScoreTable(model, &items);
}

// Gradient with respect to the parameters of sum_{x,y} upstream(x,y) r(x,y).
Eigen::VectorXd BackpropScoreTable(const ScoreModel& model,
                                   const ItemSet* items,
                                   const ScoreTable& upstream);

double Score(const ScoreModel& model, const ItemSet* items, int x, int y);

// r(x, y) - r(x, y_other). Throws kInvalidArgument when y == y_other.
double PairwiseMargin(const ScoreModel& model, const ItemSet* items, int x,
                      int y, int y_other);

// Gradient of PairwiseMargin(model, items, x, y_pos, y_neg).
Eigen::VectorXd MarginGradient(const ScoreModel& model, const ItemSet* items,
                               int x, int y_pos, int y_neg);

// Subtracts each context's mean from its tabular parameter block. No-op for
// other kinds.
void ProjectTabularMeanZero(ScoreModel& model);

}  // namespace preflab

#endif  // PREFLAB_SCORERS_H_
