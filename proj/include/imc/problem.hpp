// Copyright 2026 The imc Authors. All Rights Reserved.
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

// Synthetic ground truth L* = X_L M* X_R^T, observation sampling and the
// random split of the observed set into B subsets.

#ifndef IMC_PROBLEM_HPP_
#define IMC_PROBLEM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "imc/errors.hpp"
#include "imc/matrix.hpp"
#include "imc/rng.hpp"

namespace imc {

struct Dimensions {
  int d1 = 0;
  int d2 = 0;
  int n1 = 0;
  int n2 = 0;
  int rank = 0;
};

struct GroundTruth {
  DenseMatrix x_left;   // d1 x n1, orthonormal columns
  DenseMatrix x_right;  // d2 x n2, orthonormal columns
  DenseMatrix m_star;   // n1 x n2, rank r
  DenseMatrix l_star;   // d1 x d2
  int rank = 0;
  std::vector<double> sigma;  // singular values of m_star, nonincreasing
  double kappa = 1.0;
  // Balanced factors u_star = A sqrt(S), v_star = B sqrt(S) of the SVD
  // m_star = A S B^T; the reference point for Procrustes distances.
  DenseMatrix u_star;
  DenseMatrix v_star;

  int d1() const { return static_cast<int>(l_star.rows()); }
  int d2() const { return static_cast<int>(l_star.cols()); }
  int n1() const { return static_cast<int>(m_star.rows()); }
  int n2() const { return static_cast<int>(m_star.cols()); }
};

// Omega with its observed values. Indices are sorted row-major and unique.
struct ObservationSet {
  int rows = 0;
  int cols = 0;
  std::vector<Entry> indices;
  std::vector<double> values;
  double p = 0.0;  // |Omega| / (rows * cols)

  std::size_t size() const { return indices.size(); }
};

// Disjoint subsets of Omega, stored as positions into ObservationSet::indices.
//
// Every subset carries the same weight rate = p / B, so that the finite sum
// (1/B) sum_t F_t reproduces F exactly even when B does not divide |Omega|.
struct Partition {
  std::vector<std::vector<std::size_t>> subsets;
  double rate = 0.0;

  int count() const { return static_cast<int>(subsets.size()); }
};

namespace detail {

inline DenseMatrix gaussian_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix g(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) g(i, j) = rng.normal();
  }
  return g;
}

inline ObservationSet observe(const GroundTruth& truth,
                              std::vector<Entry> indices) {
  ObservationSet omega;
  omega.rows = truth.d1();
  omega.cols = truth.d2();
  omega.values.reserve(indices.size());
  for (const Entry& e : indices) omega.values.push_back(truth.l_star(e.row, e.col));
  omega.indices = std::move(indices);
  omega.p = static_cast<double>(omega.indices.size()) /
            (static_cast<double>(omega.rows) * omega.cols);
  return omega;
}

}  // namespace detail

inline GroundTruth generate_instance(const Dimensions& dims,
                                     double condition_target,
                                     std::uint64_t seed) {
  const auto [d1, d2, n1, n2, r] = dims;
  if (r < 1 || n1 < r || n2 < r || d1 < n1 || d2 < n2) {
    throw InvalidArgument(
        "generate_instance: need d1 >= n1 >= r, d2 >= n2 >= r, r >= 1");
  }
  if (!(condition_target >= 1.0)) {
    throw InvalidArgument("generate_instance: condition target must be >= 1");
  }

  GroundTruth t;
  t.rank = r;
  t.x_left = orthonormalize(detail::gaussian_matrix(d1, n1, derive_seed(seed, {1})));
  t.x_right = orthonormalize(detail::gaussian_matrix(d2, n2, derive_seed(seed, {2})));
  const DenseMatrix a = orthonormalize(detail::gaussian_matrix(n1, r, derive_seed(seed, {3})));
  const DenseMatrix b = orthonormalize(detail::gaussian_matrix(n2, r, derive_seed(seed, {4})));

  // Geometric spacing from 1 down to 1 / condition_target.
  t.sigma.resize(static_cast<std::size_t>(r));
  for (int k = 0; k < r; ++k) {
    const double frac = r == 1 ? 0.0 : static_cast<double>(k) / (r - 1);
    t.sigma[static_cast<std::size_t>(k)] = std::pow(condition_target, -frac);
  }
  t.kappa = t.sigma.front() / t.sigma.back();

  Vector root(r);
  for (int k = 0; k < r; ++k) root(k) = std::sqrt(t.sigma[static_cast<std::size_t>(k)]);
  t.u_star = a * root.asDiagonal();
  t.v_star = b * root.asDiagonal();
  t.m_star = t.u_star * t.v_star.transpose();
  t.l_star = t.x_left * t.m_star * t.x_right.transpose();
  return t;
}

// Bernoulli(p) observation model, scanning (i, j) in row-major order.
inline ObservationSet bernoulli_sample(const GroundTruth& truth, double p,
                                       std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw InvalidArgument("bernoulli_sample: p must lie in (0, 1]");
  }
  Rng rng(seed);
  std::vector<Entry> indices;
  for (int i = 0; i < truth.d1(); ++i) {
    for (int j = 0; j < truth.d2(); ++j) {
      if (rng.uniform() < p) indices.push_back({i, j});
    }
  }
  if (indices.empty()) {
    throw NumericError("bernoulli_sample: drew an empty observation set");
  }
  return detail::observe(truth, std::move(indices));
}

// Exactly `count` distinct entries, uniform without replacement (selection
// sampling over the row-major scan).
inline ObservationSet sample_fixed_count(const GroundTruth& truth,
                                         std::size_t count,
                                         std::uint64_t seed) {
  const std::size_t total =
      static_cast<std::size_t>(truth.d1()) * static_cast<std::size_t>(truth.d2());
  if (count < 1 || count > total) {
    throw InvalidArgument("sample_fixed_count: requested " +
                          std::to_string(count) + " samples from " +
                          std::to_string(total) + " entries");
  }
  Rng rng(seed);
  std::vector<Entry> indices;
  indices.reserve(count);
  std::size_t needed = count;
  for (std::size_t cell = 0; cell < total && needed > 0; ++cell) {
    if (rng.below(total - cell) < needed) {
      indices.push_back({static_cast<int>(cell / truth.d2()),
                         static_cast<int>(cell % truth.d2())});
      --needed;
    }
  }
  return detail::observe(truth, std::move(indices));
}

// Seeded Fisher-Yates shuffle of Omega dealt round-robin into b subsets.
inline Partition partition_observations(const ObservationSet& omega, int b,
                                        std::uint64_t seed) {
  if (b < 1 || static_cast<std::size_t>(b) > omega.size()) {
    throw InvalidArgument("partition_observations: need 1 <= b <= |Omega| (b=" +
                          std::to_string(b) + ", |Omega|=" +
                          std::to_string(omega.size()) + ")");
  }
  std::vector<std::size_t> order(omega.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  Partition part;
  part.subsets.resize(static_cast<std::size_t>(b));
  for (std::size_t k = 0; k < order.size(); ++k) {
    part.subsets[k % static_cast<std::size_t>(b)].push_back(order[k]);
  }
  for (auto& subset : part.subsets) std::sort(subset.begin(), subset.end());
  part.rate = omega.p / b;
  return part;
}

// Smallest mu with ||x||_{2,inf} <= sqrt(mu * cols / rows).
inline double incoherence_mu(const DenseMatrix& x) {
  const double row_norm = two_inf_norm(x);
  return static_cast<double>(x.rows()) / static_cast<double>(x.cols()) *
         row_norm * row_norm;
}

}  // namespace imc

#endif  // IMC_PROBLEM_HPP_
