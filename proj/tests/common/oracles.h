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

// Reference computations used only by tests. They share no code with the
// library: plain std::vector arithmetic, cyclic Jacobi rotations for
// eigenvalues, and brute-force enumeration over outcomes.

#ifndef PREFLAB_TESTS_COMMON_ORACLES_H_
#define PREFLAB_TESTS_COMMON_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace preflab::oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix Zeros(int rows, int cols) {
  return Matrix(rows, std::vector<double>(cols, 0.0));
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline std::vector<double> JacobiEigenvalues(Matrix a) {
  const int n = static_cast<int>(a.size());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    }
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> values(n);
  for (int i = 0; i < n; ++i) values[i] = a[i][i];
  std::sort(values.begin(), values.end());
  return values;
}

// Laplacian of an undirected graph given by a symmetric weight matrix.
inline Matrix Laplacian(const Matrix& w) {
  const int n = static_cast<int>(w.size());
  Matrix l = Zeros(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      l[i][j] = -w[i][j];
      l[i][i] += w[i][j];
    }
  }
  return l;
}

inline double LogSigmoid(double t) {
  return t >= 0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
}

inline double Sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Central finite-difference derivative of f at x along coordinate k.
inline double CentralDifference(const std::function<double(std::vector<double>)>& f,
                                std::vector<double> x, int k, double h) {
  const double x0 = x[k];
  x[k] = x0 + h;
  const double up = f(x);
  x[k] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

// Random probability vector with entries bounded away from zero.
inline std::vector<double> RandomSimplex(int n, std::mt19937_64& rng,
                                         double floor = 0.05) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  std::vector<double> v(n);
  double total = 0.0;
  for (double& x : v) total += (x = u(rng));
  for (double& x : v) x /= total;
  return v;
}

}  // namespace preflab::oracle

#endif  // PREFLAB_TESTS_COMMON_ORACLES_H_
