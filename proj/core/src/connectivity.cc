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

#include "preflab/connectivity.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "preflab/distribution_design.h"
#include "preflab/errors.h"
#include "preflab/representability.h"
#include "preflab/rng.h"
#include "preflab/training.h"

namespace preflab {
namespace {

constexpr double kProbabilityTolerance = 1e-9;
constexpr double kCenteringTolerance = 1e-9;
constexpr double kRankTolerance = 1e-12;

void CheckCompatible(const ComparisonDistribution& comparison,
                     const TestDistributionQ& q) {
  if (comparison.num_contexts() != q.num_contexts() ||
      comparison.num_items() != q.num_items()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "test distribution does not match the comparison "
                       "distribution's shape");
  }
}

std::vector<Eigen::MatrixXd> AllLaplacians(
    const ComparisonDistribution& comparison) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(comparison.num_contexts());
  for (int x = 0; x < comparison.num_contexts(); ++x) {
    out.push_back(ComparisonLaplacian(comparison, x));
  }
  return out;
}

// Ratio terms and the gradient of log(ratio) with respect to h.
RatioTerms RatioWithGradient(const ScoreTable& h,
                             const std::vector<Eigen::MatrixXd>& laplacians,
                             const TestDistributionQ& q, ScoreTable* grad) {
  RatioTerms terms;
  const int contexts = static_cast<int>(h.rows());
  ScoreTable lap_h(h.rows(), h.cols());
  ScoreTable centered(h.rows(), h.cols());
  for (int x = 0; x < contexts; ++x) {
    const Eigen::VectorXd row = h.row(x).transpose();
    const Eigen::VectorXd lh = laplacians[x] * row;
    lap_h.row(x) = lh.transpose();
    terms.numerator += row.dot(lh);
    const double mean = q.response.row(x).dot(h.row(x));
    centered.row(x) = h.row(x).array() - mean;
    terms.denominator +=
        q.context_marginal[x] *
        (q.response.row(x).array() * centered.row(x).array().square()).sum();
  }
  if (grad != nullptr) {
    *grad = ScoreTable(h.rows(), h.cols());
    for (int x = 0; x < contexts; ++x) {
      grad->row(x) =
          2.0 * lap_h.row(x) / terms.numerator -
          2.0 * q.context_marginal[x] *
              (q.response.row(x).array() * centered.row(x).array()).matrix() /
              terms.denominator;
    }
  }
  return terms;
}

ScoreTable SoftmaxRows(const ScoreTable& logits) {
  ScoreTable out = logits;
  for (int x = 0; x < out.rows(); ++x) {
    out.row(x).array() -= out.row(x).maxCoeff();
    out.row(x) = out.row(x).array().exp().matrix();
    out.row(x) /= out.row(x).sum();
  }
  return out;
}

ComparisonDistribution ComparisonForNegative(const ScoreTable& target,
                                             const ScoreTable& p_minus,
                                             const Eigen::VectorXd& marginal) {
  return MakeComparisonDistribution(
      ProductDistribution(BtConsistentPair(target, p_minus, marginal)));
}

// One (f, g) pair being driven down the log ratio.
class PairDescent {
 public:
  PairDescent(ScoreModel f, ScoreModel g, const HypothesisClass& cls,
              const VariationalConfig& config)
      : f_(std::move(f)),
        g_(std::move(g)),
        items_(cls.items),
        config_(config),
        adam_f_(f_.num_params(), config.step_size),
        adam_g_(g_.num_params(), config.step_size) {}

  ScoreTable Difference() const {
    return ComputeScoreTable(f_, items_) - ComputeScoreTable(g_, items_);
  }

  RatioTerms Evaluate(const std::vector<Eigen::MatrixXd>& laplacians,
                      const TestDistributionQ& q) const {
    return RatioWithGradient(Difference(), laplacians, q, nullptr);
  }

  // Evaluates the ratio at the current point and, if the denominator clears
  // the floor, takes one descent step. Returns the pre-step terms.
  RatioTerms Step(const std::vector<Eigen::MatrixXd>& laplacians,
                  const TestDistributionQ& q) {
    ScoreTable grad_h;
    const RatioTerms terms =
        RatioWithGradient(Difference(), laplacians, q, &grad_h);
    if (!(terms.denominator > config_.denominator_floor) ||
        !(terms.numerator > 0.0)) {
      return terms;
    }
    const Eigen::VectorXd grad_f = BackpropScoreTable(f_, items_, grad_h);
    const Eigen::VectorXd grad_g = -BackpropScoreTable(g_, items_, grad_h);
    if (!grad_f.allFinite() || !grad_g.allFinite()) return terms;
    if (config_.optimizer == RatioOptimizer::kAdam) {
      adam_f_.Step(f_.mutable_params(), grad_f);
      adam_g_.Step(g_.mutable_params(), grad_g);
    } else {
      f_.mutable_params() -= config_.step_size * grad_f;
      g_.mutable_params() -= config_.step_size * grad_g;
    }
    return terms;
  }

 private:
  ScoreModel f_;
  ScoreModel g_;
  const ItemSet* items_;
  VariationalConfig config_;
  AdamOptimizer adam_f_;
  AdamOptimizer adam_g_;
};

std::pair<ScoreModel, ScoreModel> InitialPair(const HypothesisClass& cls,
                                              const VariationalConfig& config,
                                              std::uint64_t label,
                                              int attempt) {
  if (config.initializer) return config.initializer(attempt);
  return {cls.Sample(DeriveSeed(config.seed, {label, 0, std::uint64_t(attempt)})),
          cls.Sample(DeriveSeed(config.seed, {label, 1, std::uint64_t(attempt)}))};
}

// Minimum ratio reached along one descent trajectory, or nullopt when the
// starting pair is degenerate.
std::optional<double> RunRestart(PairDescent& descent,
                                 const std::vector<Eigen::MatrixXd>& laplacians,
                                 const TestDistributionQ& q,
                                 const VariationalConfig& config) {
  double best = std::numeric_limits<double>::infinity();
  for (int step = 0; step <= config.steps; ++step) {
    const RatioTerms terms = step < config.steps
                                 ? descent.Step(laplacians, q)
                                 : descent.Evaluate(laplacians, q);
    if (!(terms.denominator > config.denominator_floor) ||
        !std::isfinite(terms.numerator)) {
      if (step == 0) return std::nullopt;
      break;
    }
    best = std::min(best, terms.ratio());
  }
  return best;
}

}  // namespace

TestDistributionQ TestDistributionQ::Uniform(int contexts, int items) {
  return {Eigen::VectorXd::Constant(contexts, 1.0 / contexts),
          ScoreTable::Constant(contexts, items, 1.0 / items)};
}

void ValidateQ(const TestDistributionQ& q) {
  if (q.context_marginal.size() != q.response.rows() || q.response.cols() < 2) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "test distribution shapes disagree");
  }
  const auto bad = [](const auto& v) {
    return !v.allFinite() || (v.array() < 0).any() ||
           std::abs(v.sum() - 1.0) > kProbabilityTolerance;
  };
  if (bad(q.context_marginal)) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "Q context marginal is not a probability vector");
  }
  for (int x = 0; x < q.response.rows(); ++x) {
    if (bad(q.response.row(x))) {
      throw PreflabError(ErrorCode::kInvalidArgument,
                         fmt::format("Q response row {} is not a probability "
                                     "vector", x));
    }
  }
}

std::string_view ConnMethodName(ConnMethod method) {
  switch (method) {
    case ConnMethod::kTabularSpectral: return "tabular_spectral";
    case ConnMethod::kLinearSpectral: return "linear_spectral";
    case ConnMethod::kVariational: return "variational";
  }
  return "unknown";
}

double PairedVariance(const ScoreTable& values, const TestDistributionQ& q) {
  ValidateQ(q);
  if (values.rows() != q.num_contexts() || values.cols() != q.num_items()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "values do not match the test distribution");
  }
  double total = 0.0;
  for (int x = 0; x < values.rows(); ++x) {
    const double mean = q.response.row(x).dot(values.row(x));
    total += q.context_marginal[x] *
             (q.response.row(x).array() *
              (values.row(x).array() - mean).square())
                 .sum();
  }
  return total;
}

Eigen::MatrixXd ComparisonLaplacian(const ComparisonDistribution& comparison,
                                    int context) {
  const Eigen::MatrixXd adjacency = comparison.Symmetric(context);
  Eigen::MatrixXd laplacian = -adjacency;
  laplacian.diagonal() = adjacency.rowwise().sum();
  return laplacian;
}

Eigen::VectorXd SymmetricEigenvalues(const Eigen::MatrixXd& matrix) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      matrix, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "symmetric eigensolver did not converge");
  }
  return solver.eigenvalues();
}

ConnEstimate TabularConnectivity(const TabularTripletDistribution& dist) {
  if (dist.num_contexts() != 1) {
    throw PreflabError(
        ErrorCode::kUnsupportedSetting,
        "exact tabular connectivity is defined for a single context; use the "
        "variational estimator for multi-context tables");
  }
  const ComparisonDistribution comparison = MakeComparisonDistribution(dist);
  const Eigen::VectorXd eigenvalues =
      SymmetricEigenvalues(ComparisonLaplacian(comparison, 0));
  ConnEstimate estimate;
  estimate.method = ConnMethod::kTabularSpectral;
  estimate.value = std::max(0.0, dist.num_items() * eigenvalues[1]);
  return estimate;
}

ConnEstimate LinearConnectivity(const TabularTripletDistribution& dist,
                                const TestDistributionQ& q,
                                const FeatureTable& features) {
  ValidateQ(q);
  if (features.num_contexts() != dist.num_contexts() ||
      features.num_items() != dist.num_items() ||
      q.num_contexts() != dist.num_contexts() ||
      q.num_items() != dist.num_items()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "features, Q and distribution shapes disagree");
  }
  const int k = features.dim();
  const int m = dist.num_items();
  double scale = 0.0;
  for (const auto& phi : features.features) {
    scale = std::max(scale, phi.cwiseAbs().maxCoeff());
  }
  for (int x = 0; x < features.num_contexts(); ++x) {
    const Eigen::RowVectorXd mean = q.response.row(x) * features.features[x];
    if (mean.cwiseAbs().maxCoeff() > kCenteringTolerance * std::max(1.0, scale)) {
      throw PreflabError(ErrorCode::kInvalidArgument,
                         fmt::format("features are not centered under Q in "
                                     "context {}", x));
    }
  }

  const ComparisonDistribution comparison = MakeComparisonDistribution(dist);
  Eigen::MatrixXd sigma_p = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd sigma_q = Eigen::MatrixXd::Zero(k, k);
  for (int x = 0; x < dist.num_contexts(); ++x) {
    const Eigen::MatrixXd& phi = features.features[x];
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const double w = comparison.weights[x](i, j);
        if (w == 0.0) continue;
        const Eigen::VectorXd diff = (phi.row(i) - phi.row(j)).transpose();
        sigma_p.noalias() += w * diff * diff.transpose();
      }
    }
    const Eigen::VectorXd qy =
        q.context_marginal[x] * q.response.row(x).transpose();
    sigma_q.noalias() += phi.transpose() * qy.asDiagonal() * phi;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q_solver(sigma_q);
  const Eigen::VectorXd q_values = q_solver.eigenvalues();
  const double largest = std::max(q_values.cwiseAbs().maxCoeff(), 1e-300);
  if (q_values[0] <= kRankTolerance * largest) {
    const Eigen::VectorXd null_direction = q_solver.eigenvectors().col(0);
    std::string direction;
    for (int i = 0; i < null_direction.size(); ++i) {
      direction += fmt::format("{}{:.6g}", i ? ", " : "", null_direction[i]);
    }
    throw PreflabError(ErrorCode::kRankDeficient,
                       fmt::format("Q feature covariance is singular; null "
                                   "direction [{}]", direction));
  }
  const Eigen::MatrixXd inv_sqrt = q_solver.eigenvectors() *
                                   q_values.cwiseSqrt().cwiseInverse().asDiagonal() *
                                   q_solver.eigenvectors().transpose();
  Eigen::MatrixXd whitened = inv_sqrt * sigma_p * inv_sqrt;
  whitened = 0.5 * (whitened + whitened.transpose());
  ConnEstimate estimate;
  estimate.method = ConnMethod::kLinearSpectral;
  estimate.value = std::max(0.0, SymmetricEigenvalues(whitened)[0]);
  return estimate;
}

ScoreModel HypothesisClass::Sample(std::uint64_t seed) const {
  if (kind == ScoreKind::kCosineMlp) return InitModel(kind, dims, seed);
  const int count = ScoreModel::ParamCount(kind, dims);
  if (count <= 0) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "hypothesis class has invalid dimensions");
  }
  Rng rng(DeriveSeed(seed, {StreamLabel("hypothesis_sample")}));
  ScoreModel model(kind, dims, GaussianMatrix(count, 1, 1.0, rng).col(0), seed);
  if (kind == ScoreKind::kLinear) model.set_features(features);
  return model;
}

RatioTerms ConnectivityRatio(const ScoreTable& difference,
                             const ComparisonDistribution& comparison,
                             const TestDistributionQ& q) {
  CheckCompatible(comparison, q);
  return RatioWithGradient(difference, AllLaplacians(comparison), q, nullptr);
}

ConnEstimate VariationalConnectivity(const ComparisonDistribution& comparison,
                                     const TestDistributionQ& q,
                                     const HypothesisClass& cls,
                                     const VariationalConfig& config) {
  ValidateQ(q);
  CheckCompatible(comparison, q);
  if (config.restarts < 1 || config.steps < 0 || !(config.step_size > 0.0)) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "variational config needs restarts >= 1, steps >= 0 "
                       "and a positive step size");
  }
  const std::vector<Eigen::MatrixXd> laplacians = AllLaplacians(comparison);
  const int max_attempts =
      config.max_attempts > 0 ? config.max_attempts : 4 * config.restarts;

  ConnEstimate estimate;
  estimate.method = ConnMethod::kVariational;
  for (int attempt = 0; attempt < max_attempts &&
                        estimate.restarts_used < config.restarts;
       ++attempt) {
    auto [f, g] = InitialPair(cls, config, StreamLabel("variational"), attempt);
    PairDescent descent(std::move(f), std::move(g), cls, config);
    const std::optional<double> value =
        RunRestart(descent, laplacians, q, config);
    if (!value) continue;
    estimate.per_restart_values.push_back(*value);
    ++estimate.restarts_used;
  }
  if (estimate.restarts_used == 0) {
    throw PreflabError(ErrorCode::kDegenerateClass,
                       "every variational restart had a vanishing "
                       "denominator");
  }
  estimate.value = std::max(0.0, *std::min_element(
                                     estimate.per_restart_values.begin(),
                                     estimate.per_restart_values.end()));
  return estimate;
}

ConnEstimate VariationalConnectivity(const TabularTripletDistribution& dist,
                                     const TestDistributionQ& q,
                                     const HypothesisClass& cls,
                                     const VariationalConfig& config) {
  return VariationalConnectivity(MakeComparisonDistribution(dist), q, cls,
                                 config);
}

double NegativeLogitObjective(const ScoreTable& target, const ScoreTable& logits,
                              const Eigen::VectorXd& context_marginal,
                              const ScoreTable& difference,
                              const TestDistributionQ& q,
                              ScoreTable* grad_logits) {
  const int contexts = static_cast<int>(target.rows());
  const int m = static_cast<int>(target.cols());
  const ScoreTable u = SoftmaxRows(logits);

  // Per context: A = p+^T E u (off-diagonal mass times squared margin
  // difference), B = p+^T u (diagonal mass).
  std::vector<Eigen::MatrixXd> sq(contexts);
  std::vector<Eigen::VectorXd> exp_over_s(contexts), p_plus(contexts);
  Eigen::VectorXd a(contexts), b(contexts);
  double numerator = 0.0;
  double normalizer = 0.0;
  for (int x = 0; x < contexts; ++x) {
    const Eigen::VectorXd h = difference.row(x).transpose();
    sq[x] = (h.replicate(1, m) - h.transpose().replicate(m, 1)).array().square();
    const Eigen::VectorXd ex = target.row(x).transpose().array().exp();
    const Eigen::VectorXd ux = u.row(x).transpose();
    const double s = ex.dot(ux);
    exp_over_s[x] = ex / s;
    p_plus[x] = exp_over_s[x].cwiseProduct(ux);
    a[x] = p_plus[x].dot(sq[x] * ux);
    b[x] = p_plus[x].dot(ux);
    numerator += context_marginal[x] * a[x];
    normalizer += context_marginal[x] * (1.0 - b[x]);
  }
  const double variance = PairedVariance(difference, q);
  const double value =
      std::log(numerator) - std::log(normalizer) - std::log(variance);

  if (grad_logits != nullptr) {
    *grad_logits = ScoreTable(contexts, m);
    for (int x = 0; x < contexts; ++x) {
      const Eigen::VectorXd ux = u.row(x).transpose();
      const Eigen::VectorXd e_u = sq[x] * ux;
      const Eigen::VectorXd e_p = sq[x] * p_plus[x];
      const Eigen::VectorXd grad_a =
          exp_over_s[x].cwiseProduct((e_u.array() - a[x]).matrix()) + e_p;
      const Eigen::VectorXd grad_b =
          exp_over_s[x].cwiseProduct((ux.array() - b[x]).matrix()) + p_plus[x];
      const Eigen::VectorXd grad_u =
          context_marginal[x] * (grad_a / numerator + grad_b / normalizer);
      grad_logits->row(x) =
          ux.cwiseProduct((grad_u.array() - ux.dot(grad_u)).matrix())
              .transpose();
    }
  }
  return value;
}

NegativeOptimizationResult OptimizeNegativeForConnectivity(
    const ScoreTable& target, const TestDistributionQ& q,
    const HypothesisClass& cls, const GdaConfig& config) {
  ValidateQ(q);
  if (config.outer_steps < 0 || config.inner_steps < 0 ||
      !(config.ascent_step > 0.0)) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "GDA config needs nonnegative step counts and a "
                       "positive ascent step");
  }
  if (!target.allFinite()) {
    throw PreflabError(ErrorCode::kInvalidArgument, "target must be finite");
  }
  const int contexts = static_cast<int>(target.rows());
  const int m = static_cast<int>(target.cols());
  const Eigen::VectorXd marginal =
      Eigen::VectorXd::Constant(contexts, 1.0 / contexts);
  const ScoreTable uniform = UniformNegative(contexts, m);

  NegativeOptimizationResult result;
  ScoreTable logits = ScoreTable::Zero(contexts, m);

  // Warm-started (f, g) shared across outer iterations.
  const VariationalConfig& inner = config.variational;
  const int max_attempts =
      inner.max_attempts > 0 ? inner.max_attempts : 4 * inner.restarts;
  std::optional<PairDescent> descent;
  {
    const auto laplacians =
        AllLaplacians(ComparisonForNegative(target, uniform, marginal));
    for (int attempt = 0; attempt < max_attempts && !descent; ++attempt) {
      auto [f, g] = InitialPair(cls, inner, StreamLabel("gda"), attempt);
      PairDescent candidate(std::move(f), std::move(g), cls, inner);
      if (candidate.Evaluate(laplacians, q).denominator >
          inner.denominator_floor) {
        descent.emplace(std::move(candidate));
      }
    }
  }
  if (!descent) {
    throw PreflabError(ErrorCode::kDegenerateClass,
                       "could not initialize a non-degenerate (f, g) pair");
  }

  for (int outer = 0; outer < config.outer_steps; ++outer) {
    const auto laplacians = AllLaplacians(
        ComparisonForNegative(target, SoftmaxRows(logits), marginal));
    for (int step = 0; step < config.inner_steps; ++step) {
      descent->Step(laplacians, q);
    }
    ScoreTable grad;
    const double value = NegativeLogitObjective(
        target, logits, marginal, descent->Difference(), q, &grad);
    if (!std::isfinite(value) || !grad.allFinite()) break;
    const ScoreTable next = logits + config.ascent_step * grad;
    if (!next.allFinite()) break;
    logits = next;
    result.trace.push_back(value);
  }

  VariationalConfig final_config = inner;
  final_config.seed = DeriveSeed(inner.seed, {StreamLabel("gda_final")});
  result.p_minus = SoftmaxRows(logits);
  result.achieved = VariationalConnectivity(
      ComparisonForNegative(target, result.p_minus, marginal), q, cls,
      final_config);
  result.uniform_baseline = VariationalConnectivity(
      ComparisonForNegative(target, uniform, marginal), q, cls, final_config);
  if (result.achieved.value < result.uniform_baseline.value) {
    result.kept_uniform = true;
    result.p_minus = uniform;
    result.achieved = result.uniform_baseline;
  }
  return result;
}

}  // namespace preflab
