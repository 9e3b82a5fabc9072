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

#ifndef IMC_INIT_HPP_
#define IMC_INIT_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "imc/errors.hpp"
#include "imc/matrix.hpp"
#include "imc/objective.hpp"
#include "imc/problem.hpp"
#include "imc/rng.hpp"

namespace imc {

struct Initialization {
  Factorization factors;
  // Top-r singular values of the rescaled projection; these stand in for the
  // unknown sigma_1 ... sigma_r when sizing steps and projection radii.
  std::vector<double> sigma;
};

// Spectral initializer. Picks ceil(B/2) subsets at random as Omega_0 (or all
// of Omega when use_full_omega is set), takes the rank-r SVD
// U0 S0 V0^T of P_{Omega_0}(L*) / p0 and returns
//
//   u = X_L^T U0 S0^{1/2},   v = X_R^T V0 S0^{1/2}.
inline Initialization initialize(const ObservationSet& omega,
                                 const Partition& part, const Features& x,
                                 int r, std::uint64_t seed,
                                 bool use_full_omega = false) {
  if (r < 1 || r > x.left.cols() || r > x.right.cols()) {
    throw InvalidArgument("initialize: rank must lie in [1, min(n1, n2)]");
  }
  if (part.count() < 1) throw InvalidArgument("initialize: empty partition");

  std::vector<std::size_t> chosen(static_cast<std::size_t>(part.count()));
  std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  std::size_t take = chosen.size();
  if (!use_full_omega) {
    Rng rng(seed);
    for (std::size_t i = chosen.size(); i > 1; --i) {
      std::swap(chosen[i - 1], chosen[rng.below(i)]);
    }
    take = (chosen.size() + 1) / 2;
  }

  std::size_t observed = 0;
  for (std::size_t s = 0; s < take; ++s) observed += part.subsets[chosen[s]].size();
  if (observed == 0) throw NumericError("initialize: Omega_0 is empty");
  const double p0 = static_cast<double>(observed) /
                    (static_cast<double>(omega.rows) * omega.cols);

  DenseMatrix scaled = DenseMatrix::Zero(omega.rows, omega.cols);
  for (std::size_t s = 0; s < take; ++s) {
    for (std::size_t at : part.subsets[chosen[s]]) {
      const Entry e = omega.indices[at];
      scaled(e.row, e.col) = omega.values[at] / p0;
    }
  }

  const SvdTriplet svd = truncated_svd(scaled, r);
  const double floor = std::numeric_limits<double>::epsilon() *
                       std::max(omega.rows, omega.cols) * svd.sigma.front();
  if (!(svd.sigma.back() > floor)) {
    throw NumericError(
        "initialize: rank r exceeds the numerical rank of the rescaled "
        "projection");
  }

  Vector root(r);
  for (int k = 0; k < r; ++k) root(k) = std::sqrt(svd.sigma[static_cast<std::size_t>(k)]);
  Initialization init;
  init.factors.u = x.left.transpose() * svd.u * root.asDiagonal();
  init.factors.v = x.right.transpose() * svd.v * root.asDiagonal();
  init.sigma = svd.sigma;
  return init;
}

}  // namespace imc

#endif  // IMC_INIT_HPP_
