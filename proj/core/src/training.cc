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

#include "preflab/training.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include <fmt/format.h>

#include "preflab/errors.h"
#include "preflab/rng.h"

namespace preflab {
namespace {

const double kLog2 = std::log(2.0);

// Bernoulli entropy and KL with the 0 log 0 = 0 convention. log_q and
// log_one_minus_q are passed in log space for stability.
double BernoulliEntropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return h;
}

double BernoulliCrossEntropy(double p, double log_q, double log_one_minus_q) {
  double ce = 0.0;
  if (p > 0.0) ce -= p * log_q;
  if (p < 1.0) ce -= (1.0 - p) * log_one_minus_q;
  return ce;
}

void CheckTableShape(const ScoreTable& scores,
                     const TabularTripletDistribution& dist) {
  if (scores.rows() != dist.num_contexts() ||
      scores.cols() != dist.num_items()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       fmt::format("model score table is {}x{} but the "
                                   "distribution is {}x{}",
                                   scores.rows(), scores.cols(),
                                   dist.num_contexts(), dist.num_items()));
  }
}

// Upstream gradient on the score table of the mean batch loss.
ScoreTable BatchUpstream(const ScoreTable& scores, const TripletDataset& data,
                         const std::vector<int>& order, size_t begin,
                         size_t end) {
  ScoreTable upstream = ScoreTable::Zero(scores.rows(), scores.cols());
  const double inv = 1.0 / static_cast<double>(end - begin);
  for (size_t k = begin; k < end; ++k) {
    const Triplet& t = data.triplets[order[k]];
    const double margin = scores(t.context, t.pos) - scores(t.context, t.neg);
    const double weight = Sigmoid(-margin) * inv;
    upstream(t.context, t.pos) -= weight;
    upstream(t.context, t.neg) += weight;
  }
  return upstream;
}

}  // namespace

void ValidateTrainConfig(const TrainConfig& config) {
  if (config.epochs < 1) {
    throw PreflabError(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  }
  if (config.learning_rates.empty()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "learning-rate grid is empty");
  }
  for (double lr : config.learning_rates) {
    if (!(lr > 0.0) || !std::isfinite(lr)) {
      throw PreflabError(ErrorCode::kInvalidArgument,
                         "learning rates must be positive");
    }
  }
  if (config.batch_size < 0) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "batch size must be >= 0 (0 = full batch)");
  }
}

AdamOptimizer::AdamOptimizer(int num_params, double learning_rate,
                             double beta1, double beta2, double eps)
    : learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      first_moment_(Eigen::VectorXd::Zero(num_params)),
      second_moment_(Eigen::VectorXd::Zero(num_params)) {}

void AdamOptimizer::Step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  ++step_;
  first_moment_ = beta1_ * first_moment_ + (1.0 - beta1_) * grad;
  second_moment_ =
      beta2_ * second_moment_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double correction1 = 1.0 - std::pow(beta1_, step_);
  const double correction2 = 1.0 - std::pow(beta2_, step_);
  params.array() -= learning_rate_ * (first_moment_.array() / correction1) /
                    ((second_moment_.array() / correction2).sqrt() + eps_);
}

double Softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double Sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double BtEmpiricalLoss(const ScoreTable& scores, const TripletDataset& data) {
  if (data.triplets.empty()) {
    throw PreflabError(ErrorCode::kInvalidArgument, "dataset is empty");
  }
  double total = 0.0;
  for (const Triplet& t : data.triplets) {
    total += Softplus(scores(t.context, t.neg) - scores(t.context, t.pos));
  }
  return total / static_cast<double>(data.triplets.size());
}

double BtEmpiricalLoss(const ScoreModel& model, const ItemSet* items,
                       const TripletDataset& data) {
  const ScoreTable scores = ComputeScoreTable(model, items);
  ValidateDataset(data, static_cast<int>(scores.rows()),
                  static_cast<int>(scores.cols()));
  return BtEmpiricalLoss(scores, data);
}

double BtPopulationLoss(const ScoreModel& model, const ItemSet* items,
                        const TabularTripletDistribution& dist) {
  const ScoreTable scores = ComputeScoreTable(model, items);
  CheckTableShape(scores, dist);
  const int m = dist.num_items();
  double loss = 0.0;
  for (int x = 0; x < dist.num_contexts(); ++x) {
    const double px = dist.context_marginal()[x];
    if (px == 0.0) continue;
    const Eigen::MatrixXd& t = dist.table(x);
    double context_loss = 0.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        if (t(i, j) == 0.0) continue;
        context_loss += t(i, j) * Softplus(scores(x, j) - scores(x, i));
      }
    }
    loss += px * context_loss;
  }
  return loss;
}

Eigen::VectorXd BtPopulationLossGradient(
    const ScoreModel& model, const ItemSet* items,
    const TabularTripletDistribution& dist) {
  const ScoreTable scores = ComputeScoreTable(model, items);
  CheckTableShape(scores, dist);
  const int m = dist.num_items();
  ScoreTable upstream = ScoreTable::Zero(scores.rows(), scores.cols());
  for (int x = 0; x < dist.num_contexts(); ++x) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const double joint = dist.Joint(x, i, j);
        if (joint == 0.0 || i == j) continue;
        const double weight = joint * Sigmoid(scores(x, j) - scores(x, i));
        upstream(x, i) -= weight;
        upstream(x, j) += weight;
      }
    }
  }
  return BackpropScoreTable(model, items, upstream);
}

KlDecomposition DecomposeBtLoss(const TabularTripletDistribution& dist,
                                const ScoreModel& model, const ItemSet* items) {
  const ScoreTable scores = ComputeScoreTable(model, items);
  CheckTableShape(scores, dist);
  KlDecomposition out;
  out.constant = kLog2 * dist.DiagonalMass();
  if (dist.DiagonalMass() >= 1.0) {
    out.reconstructed = out.constant;
    return out;
  }
  const ComparisonDistribution comparison = MakeComparisonDistribution(dist);
  const Cprd cprd = CprdFromDistribution(dist);
  double weighted_entropy = 0.0;
  double weighted_kl = 0.0;
  const int m = dist.num_items();
  for (int x = 0; x < dist.num_contexts(); ++x) {
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const double weight = comparison.weights[x](i, j);
        if (weight == 0.0) continue;
        const double omega = cprd.omega[x](i, j);
        const double margin = scores(x, i) - scores(x, j);
        const double log_q = -Softplus(-margin);
        const double log_one_minus_q = -Softplus(margin);
        const double entropy = BernoulliEntropy(omega);
        const double kl =
            BernoulliCrossEntropy(omega, log_q, log_one_minus_q) - entropy;
        weighted_entropy += weight * entropy;
        weighted_kl += weight * kl;
      }
    }
  }
  out.normalizer = comparison.normalizer;
  out.constant += out.normalizer * weighted_entropy;
  out.expected_kl = weighted_kl;
  out.reconstructed = out.constant + out.normalizer * out.expected_kl;
  return out;
}

TrainResult TrainBt(const ScoreModel& initial, const ItemSet* items,
                    const TripletDataset& train_data,
                    const TripletDataset& val_data, const TrainConfig& config) {
  ValidateTrainConfig(config);
  {
    const ScoreTable probe = ComputeScoreTable(initial, items);
    const int contexts = static_cast<int>(probe.rows());
    const int num_items = static_cast<int>(probe.cols());
    ValidateDataset(train_data, contexts, num_items);
    ValidateDataset(val_data, contexts, num_items);
  }

  const size_t n = train_data.triplets.size();
  const size_t batch =
      config.batch_size == 0 ? n : std::min<size_t>(config.batch_size, n);

  std::vector<LearningRateRun> runs;
  std::optional<ScoreModel> best_model;
  int best_index = -1;
  for (size_t r = 0; r < config.learning_rates.size(); ++r) {
    LearningRateRun run;
    run.learning_rate = config.learning_rates[r];
    ScoreModel model = initial;
    ProjectTabularMeanZero(model);
    AdamOptimizer adam(model.num_params(), run.learning_rate,
                       config.adam_beta1, config.adam_beta2, config.adam_eps);
    Rng rng(DeriveSeed(config.seed, {StreamLabel("shuffle"), r}));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs && !run.diverged; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (size_t begin = 0; begin < n; begin += batch) {
        const size_t end = std::min(begin + batch, n);
        const ScoreTable scores = ComputeScoreTable(model, items);
        const ScoreTable upstream =
            BatchUpstream(scores, train_data, order, begin, end);
        const Eigen::VectorXd grad =
            BackpropScoreTable(model, items, upstream);
        if (!grad.allFinite()) {
          run.diverged = true;
          break;
        }
        adam.Step(model.mutable_params(), grad);
        ProjectTabularMeanZero(model);
      }
      if (run.diverged) break;
      const ScoreTable scores = ComputeScoreTable(model, items);
      EpochLosses losses{BtEmpiricalLoss(scores, train_data),
                         BtEmpiricalLoss(scores, val_data)};
      if (!std::isfinite(losses.train) || !std::isfinite(losses.validation) ||
          !model.params().allFinite()) {
        run.diverged = true;
        break;
      }
      run.history.push_back(losses);
    }

    if (!run.diverged) {
      const double final_val = run.history.back().validation;
      if (best_index < 0 || final_val < runs[best_index].history.back().validation) {
        best_index = static_cast<int>(r);
        best_model = model;
      }
    }
    runs.push_back(std::move(run));
  }

  if (best_index < 0) {
    throw PreflabError(ErrorCode::kTrainingDiverged,
                       "training diverged for every learning rate");
  }
  TrainResult result{*best_model, runs[best_index].learning_rate,
                     runs[best_index].history,
                     runs[best_index].history.back().validation,
                     std::move(runs)};
  return result;
}

ScoreModel FitPopulation(const ScoreModel& initial, const ItemSet* items,
                         const TabularTripletDistribution& dist, int steps,
                         double learning_rate) {
  ScoreModel model = initial;
  ProjectTabularMeanZero(model);
  AdamOptimizer adam(model.num_params(), learning_rate);
  for (int step = 0; step < steps; ++step) {
    const Eigen::VectorXd grad = BtPopulationLossGradient(model, items, dist);
    if (!grad.allFinite()) {
      throw PreflabError(ErrorCode::kTrainingDiverged,
                         "population fit produced a non-finite gradient");
    }
    adam.Step(model.mutable_params(), grad);
    ProjectTabularMeanZero(model);
  }
  return model;
}

Cprd GenerativeRecoveredCprd(const TripletDataset& data, int m) {
  // The saturated family's MLE is the frequency table; the recovered CPRD is
  // its pairwise ratio.
  return CprdFromDistribution(EmpiricalDistribution(data, m));
}

}  // namespace preflab
