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

#ifndef PREFLAB_RNG_H_
#define PREFLAB_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include <Eigen/Core>

namespace preflab {

using Rng = std::mt19937_64;

// Mixes a base seed with an ordered list of stream labels into an independent
// 64-bit seed. Every randomized component derives its stream through this so
// that runs are reproducible regardless of execution order.
std::uint64_t DeriveSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> path);

// Hash of a short label, usable as a path element for DeriveSeed.
std::uint64_t StreamLabel(std::string_view label);

// Uniform double in [0, 1) with 53 random bits.
double UniformUnit(Rng& rng);

// Index drawn from an unnormalized nonnegative weight vector by inverse CDF.
int SampleIndex(const Eigen::Ref<const Eigen::VectorXd>& weights, Rng& rng);

// i.i.d. N(0, stddev^2) entries.
Eigen::MatrixXd GaussianMatrix(int rows, int cols, double stddev, Rng& rng);

}  // namespace preflab

#endif  // PREFLAB_RNG_H_
