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

#ifndef PREFLAB_ITEM_SET_H_
#define PREFLAB_ITEM_SET_H_

#include <cstdint>

#include <Eigen/Core>

namespace preflab {

// A per-context table of real values over items: row x holds the values for
// context x, column y the value for response y. Used for score functions and
// for per-context probability vectors alike.
using ScoreTable = Eigen::MatrixXd;

// The finite universe of contexts and responses. Contexts and responses are
// drawn from the same set, so an index is both a context id and an item id.
class ItemSet {
 public:
  // `items` holds one item per row. Throws kInvalidArgument when fewer than
  // two items are given or any coordinate is not finite.
  explicit ItemSet(Eigen::MatrixXd items);

  // Standard normal coordinates, the generator used by the experiments.
  static ItemSet Gaussian(int m, int d, std::uint64_t seed);

  int size() const { return static_cast<int>(items_.rows()); }
  int dim() const { return static_cast<int>(items_.cols()); }
  const Eigen::MatrixXd& items() const { return items_; }
  Eigen::VectorXd item(int i) const { return items_.row(i).transpose(); }

 private:
  Eigen::MatrixXd items_;
};

}  // namespace preflab

#endif  // PREFLAB_ITEM_SET_H_
