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

#include "preflab/json_io.h"

#include <fmt/format.h>

#include "json.hpp"
#include "preflab/errors.h"

namespace preflab {
namespace {

using Json = nlohmann::json;

constexpr int kIndent = 2;

Json Parse(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw PreflabError(ErrorCode::kIo, fmt::format("invalid JSON: {}", e.what()));
  }
}

// Runs `fn`, converting JSON type and key errors into kInvalidArgument.
template <typename Fn>
auto Guarded(Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       fmt::format("malformed document: {}", e.what()));
  }
}

Json VectorJson(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd VectorFrom(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
}

Json MatrixJson(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    rows.push_back(VectorJson(m.row(r).transpose()));
  }
  return rows;
}

Eigen::MatrixXd MatrixFrom(const Json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Eigen::MatrixXd();
  Eigen::MatrixXd out(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) {
      throw PreflabError(ErrorCode::kInvalidArgument, "ragged matrix rows");
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) out(r, c) = rows[r][c];
  }
  return out;
}

Json DimsJson(const ModelDims& d) {
  return {{"contexts", d.contexts}, {"items", d.items},
          {"features", d.features}, {"input", d.input},
          {"hidden", d.hidden},     {"embed", d.embed}};
}

ModelDims DimsFrom(const Json& j) {
  ModelDims d;
  d.contexts = j.value("contexts", 0);
  d.items = j.value("items", 0);
  d.features = j.value("features", 0);
  d.input = j.value("input", 0);
  d.hidden = j.value("hidden", 0);
  d.embed = j.value("embed", 0);
  return d;
}

Json ModelJson(const ScoreModel& model) {
  return {{"kind", ScoreKindName(model.kind())},
          {"dims", DimsJson(model.dims())},
          {"seed", model.seed()},
          {"parameters", VectorJson(model.params())}};
}

Json HistoryJson(const std::vector<EpochLosses>& history) {
  Json out = Json::array();
  for (const EpochLosses& e : history) {
    out.push_back({{"train_loss", e.train}, {"val_loss", e.validation}});
  }
  return out;
}

std::string_view OptimizerName(RatioOptimizer optimizer) {
  return optimizer == RatioOptimizer::kAdam ? "adam" : "gradient_descent";
}

RatioOptimizer ParseOptimizer(const std::string& name) {
  if (name == "adam") return RatioOptimizer::kAdam;
  if (name == "gradient_descent") return RatioOptimizer::kGradientDescent;
  throw PreflabError(ErrorCode::kInvalidArgument,
                     fmt::format("unknown optimizer '{}'", name));
}

void RejectUnknownKeys(const Json& j, std::initializer_list<const char*> keys,
                       std::string_view where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) {
          return key == k;
        }) == keys.end()) {
      throw PreflabError(ErrorCode::kInvalidArgument,
                         fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

}  // namespace

std::string ItemSetToJson(const ItemSet& items) {
  return Json{{"m", items.size()},
              {"d", items.dim()},
              {"items", MatrixJson(items.items())}}
      .dump(kIndent);
}

ItemSet ItemSetFromJson(std::string_view text) {
  const Json j = Parse(text);
  return Guarded([&] {
    Eigen::MatrixXd points = MatrixFrom(j.at("items"));
    if (points.rows() != j.at("m").get<int>() ||
        points.cols() != j.at("d").get<int>()) {
      throw PreflabError(ErrorCode::kInvalidArgument,
                         "item matrix does not match m and d");
    }
    return ItemSet(std::move(points));
  });
}

std::string MatrixToJson(const Eigen::MatrixXd& matrix) {
  return MatrixJson(matrix).dump(kIndent);
}

Eigen::MatrixXd MatrixFromJson(std::string_view text) {
  const Json j = Parse(text);
  return Guarded([&] { return MatrixFrom(j); });
}

std::string DistributionToJson(const TabularTripletDistribution& dist) {
  Json tables = Json::array();
  for (const auto& t : dist.tables()) tables.push_back(MatrixJson(t));
  return Json{{"context_marginal", VectorJson(dist.context_marginal())},
              {"tables", tables}}
      .dump(kIndent);
}

TabularTripletDistribution DistributionFromJson(std::string_view text) {
  const Json j = Parse(text);
  return Guarded([&] {
    std::vector<Eigen::MatrixXd> tables;
    for (const Json& t : j.at("tables")) tables.push_back(MatrixFrom(t));
    return TabularTripletDistribution(VectorFrom(j.at("context_marginal")),
                                      std::move(tables));
  });
}

std::string ModelToJson(const ScoreModel& model) {
  return ModelJson(model).dump(kIndent);
}

ScoreModel ModelFromJson(std::string_view text) {
  const Json j = Parse(text);
  return Guarded([&] {
    return ScoreModel(ParseScoreKind(j.at("kind").get<std::string>()),
                      DimsFrom(j.at("dims")), VectorFrom(j.at("parameters")),
                      j.value("seed", std::uint64_t{0}));
  });
}

std::string PairToJson(const ConditionalPair& pair) {
  return Json{{"p_plus", MatrixJson(pair.p_plus)},
              {"p_minus", MatrixJson(pair.p_minus)},
              {"context_marginal", VectorJson(pair.context_marginal)}}
      .dump(kIndent);
}

ConditionalPair PairFromJson(std::string_view text) {
  const Json j = Parse(text);
  return Guarded([&] {
    ConditionalPair pair{MatrixFrom(j.at("p_plus")), MatrixFrom(j.at("p_minus")),
                         VectorFrom(j.at("context_marginal"))};
    ValidatePair(pair);
    return pair;
  });
}

std::string VerdictToJson(const RepresentabilityVerdict& verdict) {
  Json j{{"representable", verdict.representable},
         {"max_edge_residual", verdict.max_edge_residual}};
  j["witness_scores"] =
      verdict.witness_scores ? MatrixJson(*verdict.witness_scores) : Json();
  if (verdict.violating_cycle) {
    j["violating_cycle"] = {{"context", verdict.violating_cycle->context},
                            {"items", verdict.violating_cycle->items},
                            {"log_odds_sum",
                             verdict.violating_cycle->log_odds_sum}};
  } else {
    j["violating_cycle"] = nullptr;
  }
  return j.dump(kIndent);
}

std::string TrainResultToJson(const TrainResult& result) {
  Json runs = Json::array();
  for (const LearningRateRun& run : result.runs) {
    runs.push_back({{"learning_rate", run.learning_rate},
                    {"diverged", run.diverged},
                    {"history", HistoryJson(run.history)}});
  }
  return Json{{"model", ModelJson(result.model)},
              {"selected_lr", result.selected_lr},
              {"final_validation_loss", result.final_validation_loss},
              {"loss_history", HistoryJson(result.loss_history)},
              {"runs", runs}}
      .dump(kIndent);
}

std::string ConnEstimateToJson(const ConnEstimate& estimate) {
  return Json{{"method", ConnMethodName(estimate.method)},
              {"value", estimate.value},
              {"restarts", estimate.restarts_used},
              {"per_restart_values", estimate.per_restart_values}}
      .dump(kIndent);
}

std::string MetricsToJson(const EvaluationMetrics& metrics) {
  return Json{{"accuracy", metrics.accuracy},
              {"acc_bottom10", metrics.acc_bottom10},
              {"acc_bottom30", metrics.acc_bottom30},
              {"estimation_error", metrics.estimation_error},
              {"accuracy_lower_bound", metrics.accuracy_lower_bound}}
      .dump(kIndent);
}

ExperimentConfig ExperimentConfigFromJson(std::string_view text) {
  const Json j = Parse(text);
  return Guarded([&] {
    ExperimentConfig c;
    RejectUnknownKeys(j,
                      {"experiment", "m", "d", "hidden", "embed", "n_grid",
                       "alpha_grid", "beta_grid", "seeds", "sweep_n", "train",
                       "conn_class", "connectivity", "gda", "output_path"},
                      "experiment config");
    if (j.contains("experiment")) {
      c.experiment = ParseExperimentKind(j["experiment"].get<std::string>());
    }
    c.m = j.value("m", c.m);
    c.d = j.value("d", c.d);
    c.hidden = j.value("hidden", c.hidden);
    c.embed = j.value("embed", c.embed);
    c.n_grid = j.value("n_grid", c.n_grid);
    c.alpha_grid = j.value("alpha_grid", c.alpha_grid);
    c.beta_grid = j.value("beta_grid", c.beta_grid);
    c.seeds = j.value("seeds", c.seeds);
    c.sweep_n = j.value("sweep_n", c.sweep_n);
    c.output_path = j.value("output_path", c.output_path);
    if (j.contains("conn_class")) {
      c.conn_class = ParseScoreKind(j["conn_class"].get<std::string>());
    }
    if (j.contains("train")) {
      const Json& t = j["train"];
      RejectUnknownKeys(t,
                        {"epochs", "learning_rates", "batch_size",
                         "adam_beta1", "adam_beta2", "adam_eps",
                         "validation_size", "seed"},
                        "train");
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.learning_rates = t.value("learning_rates", c.train.learning_rates);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.adam_beta1 = t.value("adam_beta1", c.train.adam_beta1);
      c.train.adam_beta2 = t.value("adam_beta2", c.train.adam_beta2);
      c.train.adam_eps = t.value("adam_eps", c.train.adam_eps);
      c.train.validation_size =
          t.value("validation_size", c.train.validation_size);
      c.train.seed = t.value("seed", c.train.seed);
    }
    if (j.contains("connectivity")) {
      const Json& v = j["connectivity"];
      RejectUnknownKeys(v,
                        {"restarts", "steps", "step_size", "optimizer",
                         "denominator_floor", "max_attempts"},
                        "connectivity");
      c.connectivity.restarts = v.value("restarts", c.connectivity.restarts);
      c.connectivity.steps = v.value("steps", c.connectivity.steps);
      c.connectivity.step_size = v.value("step_size", c.connectivity.step_size);
      if (v.contains("optimizer")) {
        c.connectivity.optimizer =
            ParseOptimizer(v["optimizer"].get<std::string>());
      }
      c.connectivity.denominator_floor =
          v.value("denominator_floor", c.connectivity.denominator_floor);
      c.connectivity.max_attempts =
          v.value("max_attempts", c.connectivity.max_attempts);
    }
    if (j.contains("gda")) {
      const Json& g = j["gda"];
      RejectUnknownKeys(g, {"outer_steps", "inner_steps", "ascent_step"},
                        "gda");
      c.gda.outer_steps = g.value("outer_steps", c.gda.outer_steps);
      c.gda.inner_steps = g.value("inner_steps", c.gda.inner_steps);
      c.gda.ascent_step = g.value("ascent_step", c.gda.ascent_step);
    }
    ValidateExperimentConfig(c);
    return c;
  });
}

std::string ExperimentConfigToJson(const ExperimentConfig& c) {
  return Json{
      {"experiment", ExperimentKindName(c.experiment)},
      {"m", c.m},
      {"d", c.d},
      {"hidden", c.hidden},
      {"embed", c.embed},
      {"n_grid", c.n_grid},
      {"alpha_grid", c.alpha_grid},
      {"beta_grid", c.beta_grid},
      {"seeds", c.seeds},
      {"sweep_n", c.sweep_n},
      {"train",
       {{"epochs", c.train.epochs},
        {"learning_rates", c.train.learning_rates},
        {"batch_size", c.train.batch_size},
        {"adam_beta1", c.train.adam_beta1},
        {"adam_beta2", c.train.adam_beta2},
        {"adam_eps", c.train.adam_eps},
        {"validation_size", c.train.validation_size},
        {"seed", c.train.seed}}},
      {"conn_class", ScoreKindName(c.conn_class)},
      {"connectivity",
       {{"restarts", c.connectivity.restarts},
        {"steps", c.connectivity.steps},
        {"step_size", c.connectivity.step_size},
        {"optimizer", OptimizerName(c.connectivity.optimizer)},
        {"denominator_floor", c.connectivity.denominator_floor},
        {"max_attempts", c.connectivity.max_attempts}}},
      {"gda",
       {{"outer_steps", c.gda.outer_steps},
        {"inner_steps", c.gda.inner_steps},
        {"ascent_step", c.gda.ascent_step}}},
      {"output_path", c.output_path}}
      .dump(kIndent);
}

void WriteHistoryCsv(const std::vector<EpochLosses>& history,
                     std::ostream& out) {
  out << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < history.size(); ++e) {
    out << e + 1 << ',' << fmt::format("{:.17g}", history[e].train) << ','
        << fmt::format("{:.17g}", history[e].validation) << '\n';
  }
}

}  // namespace preflab
