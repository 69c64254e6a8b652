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

#include "preflab/rng.h"

#include <algorithm>

#include "preflab/errors.h"

namespace preflab {
namespace {

// splitmix64 finalizer.
std::uint64_t Mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t DeriveSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = Mix(base);
  for (std::uint64_t element : path) {
    state = Mix(state ^ Mix(element + 0x632be59bd9b4e019ULL));
  }
  return state;
}

std::uint64_t StreamLabel(std::string_view label) {
  // FNV-1a.
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int SampleIndex(const Eigen::Ref<const Eigen::VectorXd>& weights, Rng& rng) {
  const double total = weights.sum();
  if (!(total > 0.0)) {
    throw PreflabError(ErrorCode::kInvalidArgument,
                       "SampleIndex: weights have no positive mass");
  }
  const double target = UniformUnit(rng) * total;
  double cumulative = 0.0;
  int last_positive = -1;
  for (int i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    cumulative += weights[i];
    if (target < cumulative) return i;
  }
  // Rounding can leave target marginally above the final partial sum.
  return last_positive;
}

Eigen::MatrixXd GaussianMatrix(int rows, int cols, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Eigen::MatrixXd out(rows, cols);
  // Row-major fill order so that the draw sequence does not depend on Eigen's
  // storage order.
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out(r, c) = normal(rng);
  }
  return out;
}

}  // namespace preflab
