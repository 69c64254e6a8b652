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

#ifndef PREFLAB_TRAINING_H_
#define PREFLAB_TRAINING_H_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "preflab/item_set.h"
#include "preflab/scorers.h"
#include "preflab/tabular_distribution.h"
#include "preflab/triplets.h"

namespace preflab {

struct TrainConfig {
  int epochs = 200;
  std::vector<double> learning_rates = {1e-4, 1e-3, 1e-2};
  // 0 selects full-batch updates.
  int batch_size = 256;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int validation_size = 2048;
  std::uint64_t seed = 0;
};

// Throws kInvalidArgument when epochs < 1, the grid is empty or has a
// non-positive rate, or the batch size is negative.
void ValidateTrainConfig(const TrainConfig& config);

struct EpochLosses {
  double train = 0.0;
  double validation = 0.0;
};

struct LearningRateRun {
  double learning_rate = 0.0;
  bool diverged = false;
  std::vector<EpochLosses> history;
};

struct TrainResult {
  ScoreModel model;
  double selected_lr = 0.0;
  std::vector<EpochLosses> loss_history;  // of the selected run
  double final_validation_loss = 0.0;
  std::vector<LearningRateRun> runs;  // every grid point, in grid order
};

class AdamOptimizer {
 public:
  AdamOptimizer(int num_params, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  // params -= lr * mhat / (sqrt(vhat) + eps).
  void Step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  int steps() const { return step_; }

 private:
  double learning_rate_, beta1_, beta2_, eps_;
  Eigen::VectorXd first_moment_, second_moment_;
  int step_ = 0;
};

// log(1 + exp(t)), evaluated without overflow.
double Softplus(double t);
double Sigmoid(double t);

// Mean negative log-likelihood -(1/n) sum log sigmoid(r(x,y+) - r(x,y-)).
double BtEmpiricalLoss(const ScoreModel& model, const ItemSet* items,
                       const TripletDataset& data);
// Same loss from a precomputed score table.
double BtEmpiricalLoss(const ScoreTable& scores, const TripletDataset& data);

// E_P[-log sigmoid(r(x,y+) - r(x,y-))]; diagonal cells contribute log 2.
double BtPopulationLoss(const ScoreModel& model, const ItemSet* items,
                        const TabularTripletDistribution& dist);

// Gradient of BtPopulationLoss with respect to the model parameters.
Eigen::VectorXd BtPopulationLossGradient(const ScoreModel& model,
                                         const ItemSet* items,
                                         const TabularTripletDistribution& dist);

struct KlDecomposition {
  double constant = 0.0;     // C: diagonal term plus weighted CPRD entropy
  double normalizer = 0.0;   // Z of the comparison distribution
  double expected_kl = 0.0;  // E_{comparison}[KL(Bern(omega) || Bern(model))]
  double reconstructed = 0.0;  // constant + normalizer * expected_kl
};

// Splits the population loss into a model-independent part and a weighted KL
// term. If the table has no off-diagonal mass the KL term is zero and the
// normalizer is 0.
KlDecomposition DecomposeBtLoss(const TabularTripletDistribution& dist,
                                const ScoreModel& model, const ItemSet* items);

// Runs Adam over shuffled mini-batches for every learning rate in the grid,
// starting each run from `initial`, and keeps the run with the lowest final
// validation loss. Runs whose loss becomes non-finite are excluded; if every
// run diverges, throws kTrainingDiverged.
TrainResult TrainBt(const ScoreModel& initial, const ItemSet* items,
                    const TripletDataset& train_data,
                    const TripletDataset& val_data, const TrainConfig& config);

// Full-batch Adam on the exact population loss. Used to fit a saturated model
// to a known table.
ScoreModel FitPopulation(const ScoreModel& initial, const ItemSet* items,
                         const TabularTripletDistribution& dist, int steps,
                         double learning_rate);

// CPRD recovered by the saturated tabular generative model. Its maximum
// likelihood estimate is the empirical frequency table, so this equals
// CprdFromCounts.
Cprd GenerativeRecoveredCprd(const TripletDataset& data, int m);

}  // namespace preflab

#endif  // PREFLAB_TRAINING_H_
