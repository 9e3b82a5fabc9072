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

// Self-checks behind `imc check`. Each one compares the library against an
// independent reference: central finite differences of the objective, the
// subset average of the semi-stochastic gradient, a sign enumeration for rank
// one alignment, and the factor-perturbation bound
//
//   ||Z Z^T - Z' Z'^T||_F <= 9/4 ||Z'||_2 d(Z, Z')   when d(Z, Z') <= ||Z'||_2 / 4.

#ifndef IMC_SELFCHECK_HPP_
#define IMC_SELFCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "imc/matrix.hpp"
#include "imc/objective.hpp"
#include "imc/problem.hpp"
#include "imc/rng.hpp"

namespace imc {

struct CheckResult {
  std::string name;
  double value = 0.0;      // worst observed deviation (or violation count)
  double threshold = 0.0;  // pass when value <= threshold
  bool ok = false;
};

namespace detail {

struct SmallProblem {
  GroundTruth truth;
  ObservationSet omega;
  Partition partition;
  Factorization point;
};

// Random instance with every dimension <= 10 and a random evaluation point.
inline SmallProblem small_problem(std::uint64_t seed) {
  Rng rng(seed);
  Dimensions dims;
  dims.rank = 1 + static_cast<int>(rng.below(3));
  dims.n1 = dims.rank + static_cast<int>(rng.below(3));
  dims.n2 = dims.rank + static_cast<int>(rng.below(3));
  dims.d1 = std::min(10, dims.n1 + 2 + static_cast<int>(rng.below(5)));
  dims.d2 = std::min(10, dims.n2 + 2 + static_cast<int>(rng.below(5)));
  SmallProblem sp;
  sp.truth = generate_instance(dims, 1.0 + 4.0 * rng.uniform(), derive_seed(seed, {0}));
  sp.omega = bernoulli_sample(sp.truth, 0.6, derive_seed(seed, {1}));
  const int b = std::min<int>(3, static_cast<int>(sp.omega.size()));
  sp.partition = partition_observations(sp.omega, b, derive_seed(seed, {2}));
  sp.point.u = gaussian_matrix(dims.n1, dims.rank, derive_seed(seed, {3}));
  sp.point.v = gaussian_matrix(dims.n2, dims.rank, derive_seed(seed, {4}));
  return sp;
}

// Worst componentwise |g - fd| / max(|fd|, 1e-3) over both blocks, with the
// central-difference step h = 1e-6 (1 + ||[U; V]||_F).
inline double fd_deviation(const Factorization& at, const GradientPair& g,
                           const std::function<double(const Factorization&)>& fn) {
  const double h = 1e-6 * (1.0 + at.stacked().norm());
  double worst = 0.0;
  auto sweep = [&](bool left) {
    const DenseMatrix& block = left ? at.u : at.v;
    const DenseMatrix& grad = left ? g.gu : g.gv;
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        Factorization plus = at, minus = at;
        (left ? plus.u : plus.v)(i, j) += h;
        (left ? minus.u : minus.v)(i, j) -= h;
        const double fd = (fn(plus) - fn(minus)) / (2.0 * h);
        worst = std::max(worst, std::abs(grad(i, j) - fd) / std::max(std::abs(fd), 1e-3));
      }
    }
  };
  sweep(true);
  sweep(false);
  return worst;
}

}  // namespace detail

inline CheckResult check_gradients(int instances = 20, std::uint64_t seed = 7) {
  CheckResult res{"gradient", 0.0, 1e-5, false};
  for (int k = 0; k < instances; ++k) {
    const auto sp = detail::small_problem(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
    const Features x = features_of(sp.truth);
    res.value = std::max(res.value, detail::fd_deviation(
        sp.point, grad_full(sp.point, sp.omega, x),
        [&](const Factorization& f) { return objective(f, sp.omega, x); }));
    for (int t = 0; t < sp.partition.count(); ++t) {
      res.value = std::max(res.value, detail::fd_deviation(
          sp.point, grad_subset(sp.point, sp.omega, sp.partition, t, x),
          [&](const Factorization& f) {
            return objective_subset(f, sp.omega, sp.partition, t, x);
          }));
    }
  }
  res.ok = res.value <= res.threshold;
  return res;
}

// Max over points of ||(1/B) sum_t G_t - grad F||_max, with the anchor drawn
// independently of the evaluation point.
inline CheckResult check_unbiasedness(int points = 50, std::uint64_t seed = 11) {
  CheckResult res{"unbiasedness", 0.0, 1e-10, false};
  for (int k = 0; k < points; ++k) {
    const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(k)});
    const auto sp = detail::small_problem(s);
    const Features x = features_of(sp.truth);
    Factorization anchor{detail::gaussian_matrix(sp.truth.n1(), sp.truth.rank, derive_seed(s, {9})),
                         detail::gaussian_matrix(sp.truth.n2(), sp.truth.rank, derive_seed(s, {10}))};
    const EpochReference ref = make_epoch_reference(anchor, sp.omega, x);
    GradientPair mean{DenseMatrix::Zero(sp.point.u.rows(), sp.point.u.cols()),
                      DenseMatrix::Zero(sp.point.v.rows(), sp.point.v.cols())};
    const int b = sp.partition.count();
    for (int t = 0; t < b; ++t) {
      const GradientPair g = semi_stochastic_grad(sp.point, ref, sp.omega, sp.partition, t, x);
      mean.gu += g.gu / b;
      mean.gv += g.gv / b;
    }
    const GradientPair full = grad_full(sp.point, sp.omega, x);
    res.value = std::max({res.value, (mean.gu - full.gu).cwiseAbs().maxCoeff(),
                          (mean.gv - full.gv).cwiseAbs().maxCoeff()});
  }
  res.ok = res.value <= res.threshold;
  return res;
}

// Rank one: the closed form must match min over R in {+1, -1}.
inline CheckResult check_procrustes(int pairs = 100, std::uint64_t seed = 13) {
  CheckResult res{"procrustes", 0.0, 1e-10, false};
  for (int k = 0; k < pairs; ++k) {
    const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(k)});
    const int rows = 2 + static_cast<int>(Rng(s).below(20));
    const DenseMatrix z = detail::gaussian_matrix(rows, 1, derive_seed(s, {0}));
    const DenseMatrix z_star = detail::gaussian_matrix(rows, 1, derive_seed(s, {1}));
    const double brute = std::min((z - z_star).norm(), (z + z_star).norm());
    res.value = std::max(res.value, std::abs(procrustes_align(z, z_star).distance - brute));
  }
  res.ok = res.value <= res.threshold;
  return res;
}

// Random pairs inside the hypothesis; counts violations of the bound. A
// relative slack of 1e-12 absorbs rounding in the two sides.
inline CheckResult check_perturbation_bound(int pairs = 1000, std::uint64_t seed = 17) {
  CheckResult res{"perturbation-bound", 0.0, 0.0, false};
  for (int k = 0; k < pairs; ++k) {
    const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(k)});
    Rng rng(s);
    const int r = 1 + static_cast<int>(rng.below(4));
    const int rows = r + 1 + static_cast<int>(rng.below(12));
    // Z' with a random spread of singular values, Z = Z' R + H with
    // ||H||_F <= ||Z'||_2 / 4 so that d(Z, Z') <= ||H||_F meets the hypothesis.
    DenseMatrix z_ref = detail::gaussian_matrix(rows, r, derive_seed(s, {0}));
    for (int j = 0; j < r; ++j) z_ref.col(j) *= std::pow(10.0, -2.0 * rng.uniform());
    const DenseMatrix rot = orthonormalize(detail::gaussian_matrix(r, r, derive_seed(s, {1})));
    DenseMatrix h = detail::gaussian_matrix(rows, r, derive_seed(s, {2}));
    const double spec = Eigen::JacobiSVD<Eigen::MatrixXd>(z_ref).singularValues()(0);
    h *= rng.uniform() * 0.25 * spec / h.norm();
    const DenseMatrix z = z_ref * rot + h;

    const double dist = procrustes_align(z, z_ref).distance;
    if (dist > spec / 4.0) continue;  // cannot happen by construction
    const double lhs = (z * z.transpose() - z_ref * z_ref.transpose()).norm();
    const double rhs = 2.25 * spec * dist;
    if (lhs > rhs * (1.0 + 1e-12)) res.value += 1.0;
  }
  res.ok = res.value <= res.threshold;
  return res;
}

inline std::vector<CheckResult> run_self_checks() {
  return {check_gradients(), check_unbiasedness(), check_procrustes(),
          check_perturbation_bound()};
}

}  // namespace imc

#endif  // IMC_SELFCHECK_HPP_
