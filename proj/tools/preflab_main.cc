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

// preflab gen|sample|train|diagnose|connectivity|experiment
//
// Every subcommand reads a JSON config (--config), an optional base seed
// (--seed) and writes its result to --out, or to stdout when --out is absent.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "preflab/connectivity.h"
#include "preflab/distribution_design.h"
#include "preflab/errors.h"
#include "preflab/experiments.h"
#include "preflab/json_io.h"
#include "preflab/representability.h"
#include "preflab/rng.h"
#include "preflab/tabular_distribution.h"
#include "preflab/training.h"
#include "preflab/triplets.h"

namespace preflab {
namespace {

using Json = nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
};

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw PreflabError(ErrorCode::kIo, fmt::format("cannot open '{}'", path));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Json ReadConfig(const CommonArgs& args) {
  if (args.config_path.empty()) return Json::object();
  try {
    return Json::parse(ReadFile(args.config_path));
  } catch (const Json::exception& e) {
    throw PreflabError(ErrorCode::kIo, fmt::format("{}: {}", args.config_path,
                                                   e.what()));
  }
}

// Writes through `emit` to --out, or to stdout.
template <typename Emit>
void WriteOutput(const CommonArgs& args, Emit emit) {
  if (args.out_path.empty()) {
    emit(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(args.out_path);
  if (!out) {
    throw PreflabError(ErrorCode::kIo,
                       fmt::format("cannot write '{}'", args.out_path));
  }
  emit(out);
}

void WriteText(const CommonArgs& args, const std::string& text) {
  WriteOutput(args, [&](std::ostream& out) { out << text << '\n'; });
}

std::uint64_t SeedOr(const CommonArgs& args, const Json& config) {
  if (args.seed) return *args.seed;
  return config.value("seed", std::uint64_t{0});
}

TripletDataset LoadDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw PreflabError(ErrorCode::kIo, fmt::format("cannot open '{}'", path));
  }
  return ReadDatasetCsv(in);
}

struct LoadedTruth {
  ItemSet items;
  ScoreModel model;
};

// A ground-truth document written by `gen`.
LoadedTruth LoadGroundTruth(const std::string& path) {
  const Json j = Json::parse(ReadFile(path));
  return {ItemSetFromJson(j.at("items").dump()),
          ModelFromJson(j.at("model").dump())};
}

TestDistributionQ QFromConfig(const Json& config, int contexts, int items) {
  if (!config.contains("q")) return TestDistributionQ::Uniform(contexts, items);
  const Json& q = config["q"];
  const auto marginal = q.at("context_marginal").get<std::vector<double>>();
  TestDistributionQ out{
      Eigen::Map<const Eigen::VectorXd>(marginal.data(), marginal.size()),
      MatrixFromJson(q.at("response").dump())};
  if (out.num_contexts() != contexts || out.num_items() != items) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "Q does not match the distribution's shape");
  }
  ValidateQ(out);
  return out;
}

// "distribution" (a tabular table) or "pair" (a conditional pair).
TabularTripletDistribution DistributionFromConfig(const Json& config) {
  if (config.contains("distribution")) {
    return DistributionFromJson(config["distribution"].dump());
  }
  if (config.contains("pair")) {
    return ProductDistribution(PairFromJson(config["pair"].dump()));
  }
  throw PreflabError(ErrorCode::kInvalidArgument,
                     "config needs a 'distribution' or 'pair' entry");
}

void RunGen(const CommonArgs& args) {
  const ExperimentConfig config =
      ExperimentConfigFromJson(ReadConfig(args).dump());
  const std::uint64_t seed = args.seed.value_or(config.seeds.front());
  const GroundTruth gt =
      GenGroundTruth(config.m, config.d, config.hidden, config.embed, seed);
  const Json doc{{"seed", seed},
                 {"items", Json::parse(ItemSetToJson(gt.items))},
                 {"model", Json::parse(ModelToJson(gt.model))},
                 {"scores", Json::parse(MatrixToJson(gt.scores))}};
  WriteText(args, doc.dump(2));
}

// Config: ground_truth (path from `gen`) or scores (matrix); negative
// ("uniform" or "alpha" with alpha); beta; rank; n.
void RunSample(const CommonArgs& args) {
  const Json config = ReadConfig(args);
  const std::uint64_t seed = SeedOr(args, config);
  ScoreTable target;
  if (config.contains("ground_truth")) {
    const LoadedTruth gt =
        LoadGroundTruth(config["ground_truth"].get<std::string>());
    target = ComputeScoreTable(gt.model, &gt.items);
  } else if (config.contains("scores")) {
    target = MatrixFromJson(config["scores"].dump());
  } else {
    const ExperimentConfig defaults;
    target = GenGroundTruth(config.value("m", defaults.m),
                            config.value("d", defaults.d),
                            config.value("hidden", defaults.hidden),
                            config.value("embed", defaults.embed), seed)
                 .scores;
  }
  if (config.value("rank", false)) target = RankNormalize(target);
  target = ScaleScore(target, config.value("beta", 1.0));
  const std::string negative = config.value("negative", std::string("uniform"));
  ScoreTable p_minus;
  if (negative == "uniform") {
    p_minus = UniformNegative(target.rows(), target.cols());
  } else if (negative == "alpha") {
    p_minus = AlphaNegative(target, config.at("alpha").get<double>());
  } else {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       fmt::format("unknown negative '{}'", negative));
  }
  const TripletDataset data = SampleTriplets(BtConsistentPair(target, p_minus),
                                             config.value("n", 1024), seed);
  WriteOutput(args, [&](std::ostream& out) { WriteDatasetCsv(data, out); });
}

// Config: ground_truth, train_data, validation_data, kind, hidden, embed,
// train (TrainConfig fields). `history` names an optional loss CSV.
void RunTrain(const CommonArgs& args, const std::string& history_path) {
  const Json config = ReadConfig(args);
  const std::uint64_t seed = SeedOr(args, config);
  const LoadedTruth gt =
      LoadGroundTruth(config.at("ground_truth").get<std::string>());
  const TripletDataset train =
      LoadDataset(config.at("train_data").get<std::string>());
  const TripletDataset validation =
      LoadDataset(config.at("validation_data").get<std::string>());

  Json experiment = Json::object();
  if (config.contains("train")) experiment["train"] = config["train"];
  TrainConfig train_config =
      ExperimentConfigFromJson(experiment.dump()).train;
  train_config.seed = DeriveSeed(seed, {StreamLabel("optimizer")});

  const ScoreKind kind =
      ParseScoreKind(config.value("kind", std::string("cosine_mlp")));
  const int m = gt.items.size();
  ModelDims dims;
  switch (kind) {
    case ScoreKind::kTabular: dims = ModelDims::Tabular(m, m); break;
    case ScoreKind::kLinear: dims = ModelDims::Linear(2 * gt.items.dim()); break;
    case ScoreKind::kCosineMlp:
      dims = ModelDims::CosineMlp(gt.items.dim(), config.value("hidden", 32),
                                  config.value("embed", 8));
      break;
  }
  const ScoreModel initial =
      InitModel(kind, dims, DeriveSeed(seed, {StreamLabel("init")}));
  const TrainResult result =
      TrainBt(initial, &gt.items, train, validation, train_config);
  WriteText(args, TrainResultToJson(result));
  if (!history_path.empty()) {
    std::ofstream out(history_path);
    if (!out) {
      throw PreflabError(ErrorCode::kIo,
                         fmt::format("cannot write '{}'", history_path));
    }
    WriteHistoryCsv(result.loss_history, out);
  }
}

// Config: dataset (CSV path) with m, or distribution / pair; tolerance.
void RunDiagnose(const CommonArgs& args) {
  const Json config = ReadConfig(args);
  Cprd cprd;
  if (config.contains("dataset")) {
    const TripletDataset data =
        LoadDataset(config["dataset"].get<std::string>());
    cprd = CprdFromCounts(data, config.at("m").get<int>());
  } else {
    cprd = CprdFromDistribution(DistributionFromConfig(config));
  }
  const double tol =
      config.value("tolerance", kDefaultRepresentabilityTolerance);
  WriteText(args, VerdictToJson(CheckBtRepresentable(cprd, tol)));
}

// Config: distribution or pair; method ("tabular", "linear", "variational");
// features (per-context matrices) for linear; q; class and dims, restarts,
// steps, step_size for variational.
void RunConnectivity(const CommonArgs& args) {
  const Json config = ReadConfig(args);
  const TabularTripletDistribution dist = DistributionFromConfig(config);
  const int contexts = dist.num_contexts();
  const int m = dist.num_items();
  const std::string method = config.value("method", std::string("tabular"));
  ConnEstimate estimate;
  if (method == "tabular") {
    estimate = TabularConnectivity(dist);
  } else if (method == "linear") {
    FeatureTable features;
    if (config.contains("features")) {
      for (const Json& phi : config["features"]) {
        features.features.push_back(MatrixFromJson(phi.dump()));
      }
    } else {
      features = CenteredIndicatorFeatures(contexts, m);
    }
    estimate = LinearConnectivity(dist, QFromConfig(config, contexts, m),
                                  features);
  } else if (method == "variational") {
    HypothesisClass cls;
    cls.kind = ParseScoreKind(config.value("class", std::string("tabular")));
    if (cls.kind != ScoreKind::kTabular) {
      throw PreflabError(ErrorCode::kUnsupportedSetting,
                         "the CLI estimates the tabular class only; use the "
                         "library for feature-based classes");
    }
    cls.dims = ModelDims::Tabular(contexts, m);
    VariationalConfig vc;
    vc.restarts = config.value("restarts", vc.restarts);
    vc.steps = config.value("steps", vc.steps);
    vc.step_size = config.value("step_size", vc.step_size);
    vc.seed = SeedOr(args, config);
    estimate = VariationalConnectivity(dist, QFromConfig(config, contexts, m),
                                       cls, vc);
  } else {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       fmt::format("unknown method '{}'", method));
  }
  const std::string text = ConnEstimateToJson(estimate);
  std::cout << text << '\n';
  if (!args.out_path.empty()) WriteText(args, text);
}

void RunExperimentCommand(const CommonArgs& args, const std::string& name) {
  Json raw = ReadConfig(args);
  raw["experiment"] = name;
  ExperimentConfig config = ExperimentConfigFromJson(raw.dump());
  if (args.seed) {
    for (std::size_t k = 0; k < config.seeds.size(); ++k) {
      config.seeds[k] = *args.seed + k;
    }
  }
  CommonArgs out_args = args;
  if (out_args.out_path.empty()) out_args.out_path = config.output_path;
  const std::vector<RunRecord> records = RunExperiment(config);
  WriteOutput(out_args,
              [&](std::ostream& out) { WriteRunCsv(records, out); });
}

void AddCommon(CLI::App* command, CommonArgs& args) {
  command->add_option("--config", args.config_path, "JSON config path");
  command->add_option("--seed", args.seed, "base seed (u64)");
  command->add_option("--out", args.out_path, "output path");
}

}  // namespace
}  // namespace preflab

int main(int argc, char** argv) {
  using namespace preflab;
  CLI::App app{"preflab: preference-learning laboratory"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string history_path;
  std::string experiment_name;

  CLI::App* gen = app.add_subcommand("gen", "generate a ground-truth score");
  CLI::App* sample = app.add_subcommand("sample", "sample a triplet dataset");
  CLI::App* train = app.add_subcommand("train", "train a BT score model");
  CLI::App* diagnose =
      app.add_subcommand("diagnose", "test BT representability");
  CLI::App* connectivity =
      app.add_subcommand("connectivity", "compute a connectivity degree");
  CLI::App* experiment = app.add_subcommand("experiment", "run an experiment");
  for (CLI::App* command :
       {gen, sample, train, diagnose, connectivity, experiment}) {
    AddCommon(command, args);
  }
  train->add_option("--history", history_path, "loss history CSV path");
  experiment
      ->add_option("name", experiment_name,
                   "margin | alpha_sweep | conn_optimize")
      ->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) RunGen(args);
    if (sample->parsed()) RunSample(args);
    if (train->parsed()) RunTrain(args, history_path);
    if (diagnose->parsed()) RunDiagnose(args);
    if (connectivity->parsed()) RunConnectivity(args);
    if (experiment->parsed()) RunExperimentCommand(args, experiment_name);
  } catch (const PreflabError& e) {
    std::cerr << "error [" << ErrorCodeName(e.code()) << "]: " << e.what()
              << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
