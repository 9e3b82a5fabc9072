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

#ifndef IMC_METRICS_HPP_
#define IMC_METRICS_HPP_

#include "imc/errors.hpp"
#include "imc/matrix.hpp"
#include "imc/objective.hpp"
#include "imc/problem.hpp"

namespace imc {

namespace detail {

inline void check_against_truth(const Factorization& f, const GroundTruth& t) {
  if (f.u.rows() != t.n1() || f.v.rows() != t.n2() ||
      f.u.cols() != t.rank || f.v.cols() != t.rank) {
    throw InvalidArgument("factorization does not match the ground truth");
  }
}

}  // namespace detail

// ||X_L U V^T X_R^T - L*||_F / ||L*||_F, evaluated literally.
inline double relative_error(const Factorization& f, const GroundTruth& truth) {
  if (f.u.rows() != truth.n1() || f.v.rows() != truth.n2() ||
      f.u.cols() != f.v.cols()) {
    throw InvalidArgument("relative_error: dimension mismatch");
  }
  const double denom = frobenius_norm(truth.l_star);
  if (denom == 0.0) throw InvalidArgument("relative_error: L* is zero");
  const DenseMatrix estimate =
      (truth.x_left * f.u) * (truth.x_right * f.v).transpose();
  return frobenius_norm(estimate - truth.l_star) / denom;
}

// d([U; V], [U*; V*]) with the balanced ground-truth factors.
inline double distance_to_truth(const Factorization& f,
                                const GroundTruth& truth) {
  detail::check_against_truth(f, truth);
  const Factorization star{truth.u_star, truth.v_star};
  return procrustes_align(f.stacked(), star.stacked()).distance;
}

// Relative error for repeated evaluation inside a solver. Since
// L* = X_L M* X_R^T,
//   ||X_L (U V^T - M*) X_R^T||_F^2 = <G_L D G_R, D>,  D = U V^T - M*,
// with the Gram matrices G = X^T X cached once.
class ErrorMeter {
 public:
  explicit ErrorMeter(const GroundTruth& truth)
      : truth_(truth),
        gram_left_(truth.x_left.transpose() * truth.x_left),
        gram_right_(truth.x_right.transpose() * truth.x_right),
        denom_(frobenius_norm(truth.l_star)) {
    if (denom_ == 0.0) throw InvalidArgument("relative_error: L* is zero");
  }

  double relative_error(const Factorization& f) const {
    const DenseMatrix d = f.u * f.v.transpose() - truth_.m_star;
    const double sq = (gram_left_ * d * gram_right_).cwiseProduct(d).sum();
    return std::sqrt(std::max(sq, 0.0)) / denom_;
  }

  double distance(const Factorization& f) const {
    return distance_to_truth(f, truth_);
  }

 private:
  const GroundTruth& truth_;
  DenseMatrix gram_left_;
  DenseMatrix gram_right_;
  double denom_;
};

}  // namespace imc

#endif  // IMC_METRICS_HPP_
