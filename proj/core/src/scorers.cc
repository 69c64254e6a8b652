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

#include "preflab/scorers.h"

#include <cmath>
#include <utility>

#include <Eigen/QR>
#include <fmt/format.h>

#include "preflab/errors.h"
#include "preflab/rng.h"

namespace preflab {
namespace {

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using MutableMap = Eigen::Map<Eigen::MatrixXd>;

// Views of the flat cosine-MLP parameter vector. Layout: W1 (hidden x input,
// column-major), b1, W2 (embed x hidden, column-major), b2.
struct MlpView {
  ConstMap w1;
  Eigen::Map<const Eigen::VectorXd> b1;
  ConstMap w2;
  Eigen::Map<const Eigen::VectorXd> b2;

  MlpView(const Eigen::VectorXd& p, const ModelDims& d)
      : w1(p.data(), d.hidden, d.input),
        b1(p.data() + d.hidden * d.input, d.hidden),
        w2(p.data() + d.hidden * (d.input + 1), d.embed, d.hidden),
        b2(p.data() + d.hidden * (d.input + 1) + d.embed * d.hidden, d.embed) {}
};

const ItemSet& RequireItems(const ItemSet* items, const char* what) {
  if (items == nullptr) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       fmt::format("{} requires an item set", what));
  }
  return *items;
}

// Feature table for a linear model: attached, or concatenated item vectors.
const FeatureTable& LinearFeatures(const ScoreModel& model, const ItemSet* items,
                                   FeatureTable& scratch) {
  if (model.features() != nullptr) return *model.features();
  scratch = ConcatFeatures(RequireItems(items, "linear model without features"));
  return scratch;
}

void CheckIndices(const ScoreTable& table, int x, int y) {
  if (x < 0 || x >= table.rows() || y < 0 || y >= table.cols()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       fmt::format("score index ({}, {}) out of range", x, y));
  }
}

}  // namespace

std::string_view ScoreKindName(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kTabular: return "tabular";
    case ScoreKind::kLinear: return "linear";
    case ScoreKind::kCosineMlp: return "cosine_mlp";
  }
  return "unknown";
}

ScoreKind ParseScoreKind(std::string_view name) {
  if (name == "tabular") return ScoreKind::kTabular;
  if (name == "linear") return ScoreKind::kLinear;
  if (name == "cosine_mlp") return ScoreKind::kCosineMlp;
  throw PreflabError(ErrorCode::kInvalidArgument,
                     fmt::format("unknown model kind '{}'", name));
}

FeatureTable ConcatFeatures(const ItemSet& items) {
  const int m = items.size();
  const int d = items.dim();
  FeatureTable table;
  table.features.reserve(m);
  for (int x = 0; x < m; ++x) {
    Eigen::MatrixXd phi(m, 2 * d);
    phi.leftCols(d).rowwise() = items.items().row(x);
    phi.rightCols(d) = items.items();
    table.features.push_back(std::move(phi));
  }
  return table;
}

FeatureTable CenterFeatures(const FeatureTable& table,
                            const ScoreTable& weights) {
  if (weights.rows() != table.num_contexts() ||
      weights.cols() != table.num_items()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "centering weights do not match the feature table");
  }
  FeatureTable out = table;
  for (int x = 0; x < out.num_contexts(); ++x) {
    const Eigen::RowVectorXd mean = weights.row(x) * table.features[x];
    out.features[x].rowwise() -= mean;
  }
  return out;
}

FeatureTable CenteredIndicatorFeatures(int contexts, int items) {
  if (contexts < 1 || items < 2) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "indicator features need >= 1 context and >= 2 items");
  }
  // Q from a QR of [1 | I] has the all-ones direction as its first column;
  // the remaining columns span its orthogonal complement.
  Eigen::MatrixXd spanning(items, items);
  spanning.col(0).setOnes();
  spanning.rightCols(items - 1) =
      Eigen::MatrixXd::Identity(items, items).leftCols(items - 1);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(spanning);
  const Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd basis = q.rightCols(items - 1);
  FeatureTable table;
  table.features.assign(contexts, basis);
  return table;
}

ScoreModel::ScoreModel(ScoreKind kind, ModelDims dims, Eigen::VectorXd params,
                       std::uint64_t seed)
    : kind_(kind), dims_(dims), params_(std::move(params)), seed_(seed) {
  const int expected = ParamCount(kind_, dims_);
  if (expected <= 0 || params_.size() != expected) {
    throw PreflabError(
        ErrorCode::kInvalidArgument,
        fmt::format("{} model expects {} parameters, got {}",
                    ScoreKindName(kind_), expected, params_.size()));
  }
  if (!params_.allFinite()) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "model parameters must be finite");
  }
}

int ScoreModel::ParamCount(ScoreKind kind, const ModelDims& d) {
  switch (kind) {
    case ScoreKind::kTabular:
      return d.contexts > 0 && d.items > 1 ? d.contexts * d.items : 0;
    case ScoreKind::kLinear:
      return d.features > 0 ? d.features : 0;
    case ScoreKind::kCosineMlp:
      if (d.input <= 0 || d.hidden <= 0 || d.embed <= 0) return 0;
      return d.input * d.hidden + d.hidden + d.hidden * d.embed + d.embed;
  }
  return 0;
}

ScoreModel InitModel(ScoreKind kind, const ModelDims& dims, std::uint64_t seed) {
  const int count = ScoreModel::ParamCount(kind, dims);
  if (count <= 0) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       fmt::format("invalid dimensions for a {} model",
                                   ScoreKindName(kind)));
  }
  Eigen::VectorXd params = Eigen::VectorXd::Zero(count);
  if (kind == ScoreKind::kCosineMlp) {
    Rng rng(DeriveSeed(seed, {StreamLabel("init_cosine_mlp")}));
    const Eigen::MatrixXd w1 = GaussianMatrix(
        dims.hidden, dims.input, 1.0 / std::sqrt(double(dims.input)), rng);
    const Eigen::MatrixXd w2 = GaussianMatrix(
        dims.embed, dims.hidden, 1.0 / std::sqrt(double(dims.hidden)), rng);
    MutableMap(params.data(), dims.hidden, dims.input) = w1;
    MutableMap(params.data() + dims.hidden * (dims.input + 1), dims.embed,
               dims.hidden) = w2;
  }
  return ScoreModel(kind, dims, std::move(params), seed);
}

MlpActivations MlpForward(const ScoreModel& model, const ItemSet& items) {
  const ModelDims& d = model.dims();
  if (items.dim() != d.input) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       fmt::format("item dimension {} != model input {}",
                                   items.dim(), d.input));
  }
  const MlpView view(model.params(), d);
  MlpActivations act;
  act.pre = items.items() * view.w1.transpose();
  act.pre.rowwise() += view.b1.transpose();
  act.hidden = act.pre.cwiseMax(0.0);
  act.embedding = act.hidden * view.w2.transpose();
  act.embedding.rowwise() += view.b2.transpose();
  return act;
}

ScoreTable ComputeScoreTable(const ScoreModel& model, const ItemSet* items) {
  switch (model.kind()) {
    case ScoreKind::kTabular: {
      const ModelDims& d = model.dims();
      // Parameters are context-major: theta[x * items + y].
      return ConstMap(model.params().data(), d.items, d.contexts).transpose();
    }
    case ScoreKind::kLinear: {
      FeatureTable scratch;
      const FeatureTable& phi = LinearFeatures(model, items, scratch);
      if (phi.dim() != model.dims().features) {
        throw PreflabError(ErrorCode::kInvalidArgument,
                           "feature dimension does not match the linear model");
      }
      ScoreTable table(phi.num_contexts(), phi.num_items());
      for (int x = 0; x < phi.num_contexts(); ++x) {
        table.row(x) = (phi.features[x] * model.params()).transpose();
      }
      return table;
    }
    case ScoreKind::kCosineMlp: {
      const MlpActivations act =
          MlpForward(model, RequireItems(items, "cosine_mlp model"));
      const Eigen::VectorXd norms = act.embedding.rowwise().norm();
      const Eigen::MatrixXd dots = act.embedding * act.embedding.transpose();
      const Eigen::MatrixXd denom =
          (norms * norms.transpose()).cwiseMax(kCosineEpsilon);
      return dots.cwiseQuotient(denom);
    }
  }
  return {};
}

Eigen::VectorXd BackpropScoreTable(const ScoreModel& model,
                                   const ItemSet* items,
                                   const ScoreTable& upstream) {
  switch (model.kind()) {
    case ScoreKind::kTabular: {
      const ModelDims& d = model.dims();
      if (upstream.rows() != d.contexts || upstream.cols() != d.items) {
        throw PreflabError(ErrorCode::kInvalidArgument,
                           "upstream gradient shape mismatch");
      }
      Eigen::VectorXd grad(model.num_params());
      MutableMap(grad.data(), d.items, d.contexts) = upstream.transpose();
      return grad;
    }
    case ScoreKind::kLinear: {
      FeatureTable scratch;
      const FeatureTable& phi = LinearFeatures(model, items, scratch);
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.num_params());
      for (int x = 0; x < phi.num_contexts(); ++x) {
        grad += phi.features[x].transpose() * upstream.row(x).transpose();
      }
      return grad;
    }
    case ScoreKind::kCosineMlp: {
      const ItemSet& set = RequireItems(items, "cosine_mlp model");
      const ModelDims& d = model.dims();
      const MlpView view(model.params(), d);
      const MlpActivations act = MlpForward(model, set);
      const Eigen::MatrixXd& u = act.embedding;
      const int m = static_cast<int>(u.rows());
      const Eigen::VectorXd norms = u.rowwise().norm();

      // d/du_a of cos(u_a, u_b) = u_b / (|u_a||u_b|) - cos * u_a / |u_a|^2
      // inside the guard; u_b / eps where the product of norms is clamped.
      Eigen::MatrixXd grad_u = Eigen::MatrixXd::Zero(m, d.embed);
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
          const double g = upstream(a, b);
          if (g == 0.0) continue;
          const double product = norms[a] * norms[b];
          if (product > kCosineEpsilon) {
            const double cosine = u.row(a).dot(u.row(b)) / product;
            grad_u.row(a) += g * (u.row(b) / product -
                                  cosine * u.row(a) / (norms[a] * norms[a]));
            grad_u.row(b) += g * (u.row(a) / product -
                                  cosine * u.row(b) / (norms[b] * norms[b]));
          } else {
            grad_u.row(a) += g * u.row(b) / kCosineEpsilon;
            grad_u.row(b) += g * u.row(a) / kCosineEpsilon;
          }
        }
      }

      Eigen::VectorXd grad(model.num_params());
      double* out = grad.data();
      const Eigen::MatrixXd grad_hidden =
          (grad_u * view.w2).cwiseProduct(
              (act.pre.array() > 0.0).cast<double>().matrix());
      MutableMap(out, d.hidden, d.input) = grad_hidden.transpose() * set.items();
      out += d.hidden * d.input;
      Eigen::Map<Eigen::VectorXd>(out, d.hidden) =
          grad_hidden.colwise().sum().transpose();
      out += d.hidden;
      MutableMap(out, d.embed, d.hidden) = grad_u.transpose() * act.hidden;
      out += d.embed * d.hidden;
      Eigen::Map<Eigen::VectorXd>(out, d.embed) =
          grad_u.colwise().sum().transpose();
      return grad;
    }
  }
  return {};
}

double Score(const ScoreModel& model, const ItemSet* items, int x, int y) {
  const ScoreTable table = ComputeScoreTable(model, items);
  CheckIndices(table, x, y);
  return table(x, y);
}

double PairwiseMargin(const ScoreModel& model, const ItemSet* items, int x,
                      int y, int y_other) {
  if (y == y_other) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "margin requires two distinct responses");
  }
  const ScoreTable table = ComputeScoreTable(model, items);
  CheckIndices(table, x, y);
  CheckIndices(table, x, y_other);
  return table(x, y) - table(x, y_other);
}

Eigen::VectorXd MarginGradient(const ScoreModel& model, const ItemSet* items,
                               int x, int y_pos, int y_neg) {
  if (y_pos == y_neg) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "margin gradient requires two distinct responses");
  }
  const ScoreTable table = ComputeScoreTable(model, items);
  CheckIndices(table, x, y_pos);
  CheckIndices(table, x, y_neg);
  ScoreTable upstream = ScoreTable::Zero(table.rows(), table.cols());
  upstream(x, y_pos) = 1.0;
  upstream(x, y_neg) = -1.0;
  return BackpropScoreTable(model, items, upstream);
}

void ProjectTabularMeanZero(ScoreModel& model) {
  if (model.kind() != ScoreKind::kTabular) return;
  const ModelDims& d = model.dims();
  MutableMap theta(model.mutable_params().data(), d.items, d.contexts);
  theta.rowwise() -= theta.colwise().mean();
}

}  // namespace preflab
