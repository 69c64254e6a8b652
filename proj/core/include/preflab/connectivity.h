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

// Connectivity degree of a triplet distribution with respect to a hypothesis
// class H and a test distribution Q:
//
//   lambda = inf_{f,g in H}  E_cmp[(Delta f - Delta g)^2] / Var_Q[f - g]
//
// where E_cmp is the comparison distribution over (context, unordered pair)
// and Var_Q averages the per-context response variance over contexts.
//
// Exact values are available for the single-context tabular class (m times
// the Fiedler value of the comparison-graph Laplacian) and for linear classes
// with Q-centered features (smallest eigenvalue of the whitened pair
// covariance). Any class with gradients can be estimated variationally: each
// restart descends the log ratio from a random (f, g), and the minimum
// achieved ratio is reported. Every achieved ratio upper-bounds the infimum.

#ifndef PREFLAB_CONNECTIVITY_H_
#define PREFLAB_CONNECTIVITY_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "preflab/item_set.h"
#include "preflab/scorers.h"
#include "preflab/tabular_distribution.h"

namespace preflab {

struct TestDistributionQ {
  Eigen::VectorXd context_marginal;
  ScoreTable response;  // rows: contexts, each a distribution over items

  static TestDistributionQ Uniform(int contexts, int items);
  int num_contexts() const { return static_cast<int>(response.rows()); }
  int num_items() const { return static_cast<int>(response.cols()); }
};

// Throws kInvalidArgument unless every vector is a probability vector.
void ValidateQ(const TestDistributionQ& q);

enum class ConnMethod { kTabularSpectral, kLinearSpectral, kVariational };
std::string_view ConnMethodName(ConnMethod method);

struct ConnEstimate {
  double value = 0.0;
  ConnMethod method = ConnMethod::kVariational;
  int restarts_used = 0;
  std::vector<double> per_restart_values;
};

// E_{x ~ Q_x} Var_{y ~ Q_y(.|x)} values(x, y).
double PairedVariance(const ScoreTable& values, const TestDistributionQ& q);

// Weighted Laplacian of one context's comparison graph.
Eigen::MatrixXd ComparisonLaplacian(const ComparisonDistribution& comparison,
                                    int context);

// Eigenvalues of a symmetric matrix in ascending order.
Eigen::VectorXd SymmetricEigenvalues(const Eigen::MatrixXd& matrix);

// m * lambda_2(L) for a single-context distribution, uniform Q and the
// sum-zero tabular class. Throws kUnsupportedSetting for more than one
// context and kDegenerateDistribution without off-diagonal mass.
ConnEstimate TabularConnectivity(const TabularTripletDistribution& dist);

// lambda_min(S_Q^{-1/2} S_P S_Q^{-1/2}). Features must be centered under Q
// (kInvalidArgument otherwise); a singular S_Q raises kRankDeficient with the
// null direction in the message.
ConnEstimate LinearConnectivity(const TabularTripletDistribution& dist,
                                const TestDistributionQ& q,
                                const FeatureTable& features);

// Hypothesis class description for the variational estimator.
struct HypothesisClass {
  ScoreKind kind = ScoreKind::kTabular;
  ModelDims dims;
  const ItemSet* items = nullptr;
  std::shared_ptr<const FeatureTable> features;

  // Random member: N(0, 1) parameters for tabular and linear, InitModel for
  // cosine_mlp.
  ScoreModel Sample(std::uint64_t seed) const;
};

enum class RatioOptimizer { kGradientDescent, kAdam };

struct VariationalConfig {
  int restarts = 8;
  int steps = 2000;
  double step_size = 1e-2;
  RatioOptimizer optimizer = RatioOptimizer::kGradientDescent;
  std::uint64_t seed = 0;
  double denominator_floor = 1e-12;
  // Attempts allowed before giving up on reaching `restarts` accepted
  // restarts; 0 means 4 * restarts.
  int max_attempts = 0;
  // Optional override for the initial (f, g) of attempt k.
  std::function<std::pair<ScoreModel, ScoreModel>(int attempt)> initializer;
};

struct RatioTerms {
  double numerator = 0.0;    // E_cmp[(Delta h)^2]
  double denominator = 0.0;  // Var_Q[h]
  double ratio() const { return numerator / denominator; }
};

// Terms of the connectivity ratio for h = f - g given as a score table.
RatioTerms ConnectivityRatio(const ScoreTable& difference,
                             const ComparisonDistribution& comparison,
                             const TestDistributionQ& q);

// Runs the restarts and returns the minimum achieved ratio. Throws
// kDegenerateClass if no restart has a denominator above the floor.
ConnEstimate VariationalConnectivity(const ComparisonDistribution& comparison,
                                     const TestDistributionQ& q,
                                     const HypothesisClass& cls,
                                     const VariationalConfig& config);
ConnEstimate VariationalConnectivity(const TabularTripletDistribution& dist,
                                     const TestDistributionQ& q,
                                     const HypothesisClass& cls,
                                     const VariationalConfig& config);

struct GdaConfig {
  int outer_steps = 100;
  int inner_steps = 20;
  double ascent_step = 5e-2;
  // Used for the inner (f, g) updates and for the final re-estimates.
  VariationalConfig variational;
};

struct NegativeOptimizationResult {
  ScoreTable p_minus;
  ConnEstimate achieved;
  // Variational estimate for uniform p_minus with the same restarts.
  ConnEstimate uniform_baseline;
  // True when the optimized iterate did not beat the uniform starting point
  // and the starting point was returned instead.
  bool kept_uniform = false;
  // Inner-objective log ratio after each outer step.
  std::vector<double> trace;
};

// log of the connectivity ratio of the BT-consistent product distribution
// with p_minus = softmax(logits) for a fixed difference table h, and its
// gradient with respect to the logits.
double NegativeLogitObjective(const ScoreTable& target, const ScoreTable& logits,
                              const Eigen::VectorXd& context_marginal,
                              const ScoreTable& difference,
                              const TestDistributionQ& q,
                              ScoreTable* grad_logits);

// Maximizes the variational connectivity over p_minus by alternating
// gradient descent on (f, g) and ascent on per-context softmax logits,
// starting from uniform. The returned value is re-estimated from fresh
// restarts. Contexts are weighted uniformly.
NegativeOptimizationResult OptimizeNegativeForConnectivity(
    const ScoreTable& target, const TestDistributionQ& q,
    const HypothesisClass& cls, const GdaConfig& config);

}  // namespace preflab

#endif  // PREFLAB_CONNECTIVITY_H_
