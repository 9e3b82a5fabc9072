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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "imc/errors.hpp"
#include "imc/matrix.hpp"
#include "imc/rng.hpp"
#include "oracles.hpp"

namespace {

using imc::DenseMatrix;
using imc::Entry;

DenseMatrix mat(int rows, int cols, std::initializer_list<double> values) {
  DenseMatrix m(rows, cols);
  auto it = values.begin();
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = *it++;
  }
  return m;
}

TEST(FrobeniusNorm, HandValues) {
  EXPECT_DOUBLE_EQ(imc::frobenius_norm(mat(1, 2, {3, 4})), 5.0);
  EXPECT_EQ(imc::frobenius_norm(DenseMatrix::Zero(3, 3)), 0.0);
  EXPECT_DOUBLE_EQ(imc::frobenius_norm(DenseMatrix::Identity(2, 2)), std::sqrt(2.0));
}

TEST(SpectralNorm, HandValues) {
  EXPECT_NEAR(imc::spectral_norm(mat(2, 2, {3, 0, 0, 1})), 3.0, 1e-9);
  EXPECT_EQ(imc::spectral_norm(DenseMatrix::Zero(4, 3)), 0.0);
  EXPECT_NEAR(imc::spectral_norm(mat(2, 2, {0, 2, 0, 0})), 2.0, 1e-9);
}

TEST(SpectralNorm, MatchesJacobiOracle) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const DenseMatrix a = oracle::random_matrix(7, 5, s);
    EXPECT_NEAR(imc::spectral_norm(a), oracle::singular_values(a)[0], 1e-6);
  }
}

TEST(SpectralNorm, NonConvergenceIsReported) {
  // Two equal leading singular values with opposite-sign components make the
  // Rayleigh quotient converge slowly; a single iteration can never pass.
  EXPECT_THROW(imc::spectral_norm(oracle::random_matrix(6, 6, 1), 1e-10, 1),
               imc::NumericError);
  EXPECT_THROW(imc::spectral_norm(DenseMatrix::Identity(2, 2), 0.0), imc::InvalidArgument);
}

TEST(TwoInfNorm, HandValues) {
  EXPECT_DOUBLE_EQ(imc::two_inf_norm(DenseMatrix::Identity(2, 2)), 1.0);
  EXPECT_DOUBLE_EQ(imc::two_inf_norm(mat(2, 2, {3, 4, 0, 1})), 5.0);
}

TEST(TwoInfNorm, MatchesRowScan) {
  const DenseMatrix a = oracle::random_matrix(5, 3, 42);
  double best = 0.0;
  for (int i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 3; ++j) sum += a(i, j) * a(i, j);
    best = std::max(best, std::sqrt(sum));
  }
  EXPECT_NEAR(imc::two_inf_norm(a), best, 1e-14);
}

TEST(Orthonormalize, AlreadyOrthonormal) {
  const DenseMatrix q0 = imc::orthonormalize(oracle::random_matrix(8, 3, 3));
  const DenseMatrix q = imc::orthonormalize(q0);
  EXPECT_LE((q.transpose() * q - DenseMatrix::Identity(3, 3)).norm(), 1e-10);
  EXPECT_LE((q - q0).norm(), 1e-10);  // positive-diagonal convention is stable
}

TEST(Orthonormalize, SingleColumn) {
  const DenseMatrix q = imc::orthonormalize(mat(3, 1, {2, 0, 0}));
  EXPECT_NEAR(std::abs(q(0, 0)), 1.0, 1e-15);
  EXPECT_EQ(q(1, 0), 0.0);
  EXPECT_EQ(q(2, 0), 0.0);
}

TEST(Orthonormalize, GaussianSpanPreserved) {
  const DenseMatrix a = oracle::random_matrix(200, 20, 9);
  const DenseMatrix q = imc::orthonormalize(a);
  EXPECT_LE((q.transpose() * q - DenseMatrix::Identity(20, 20)).norm(), 1e-10);
  EXPECT_LE((q * (q.transpose() * a) - a).norm(), 1e-8);
}

TEST(Orthonormalize, Errors) {
  DenseMatrix a = oracle::random_matrix(6, 3, 1);
  a.col(2) = a.col(0) + a.col(1);
  EXPECT_THROW(imc::orthonormalize(a), imc::NumericError);
  EXPECT_THROW(imc::orthonormalize(oracle::random_matrix(2, 3, 1)), imc::InvalidArgument);
}

TEST(TruncatedSvd, Diagonal) {
  DenseMatrix a = DenseMatrix::Zero(3, 3);
  a(0, 0) = 5; a(1, 1) = 3; a(2, 2) = 1;
  const imc::SvdTriplet s = imc::truncated_svd(a, 2);
  ASSERT_EQ(s.sigma.size(), 2u);
  EXPECT_NEAR(s.sigma[0], 5.0, 1e-12);
  EXPECT_NEAR(s.sigma[1], 3.0, 1e-12);
}

TEST(TruncatedSvd, RankOneReconstruction) {
  const DenseMatrix x = oracle::random_matrix(6, 1, 4), y = oracle::random_matrix(4, 1, 5);
  const DenseMatrix a = x * y.transpose();
  const imc::SvdTriplet s = imc::truncated_svd(a, 1);
  EXPECT_LE((s.sigma[0] * s.u * s.v.transpose() - a).norm(), 1e-10);
}

TEST(TruncatedSvd, MatchesJacobiGramOracle) {
  const DenseMatrix a = oracle::random_matrix(6, 5, 77);
  const std::vector<double> ref = oracle::singular_values(a);
  const imc::SvdTriplet s = imc::truncated_svd(a, 2);
  EXPECT_NEAR(s.sigma[0], ref[0], 1e-8);
  EXPECT_NEAR(s.sigma[1], ref[1], 1e-8);
}

TEST(TruncatedSvd, Invariants) {
  const DenseMatrix a = oracle::random_matrix(9, 6, 8);
  const imc::SvdTriplet s = imc::truncated_svd(a, 4);
  for (std::size_t k = 1; k < s.sigma.size(); ++k) EXPECT_GE(s.sigma[k - 1], s.sigma[k]);
  EXPECT_LE((s.u.transpose() * s.u - DenseMatrix::Identity(4, 4)).norm(), 1e-10);
  EXPECT_LE((s.v.transpose() * s.v - DenseMatrix::Identity(4, 4)).norm(), 1e-10);
  for (int j = 0; j < 4; ++j) {
    Eigen::Index arg = 0;
    s.u.col(j).cwiseAbs().maxCoeff(&arg);
    EXPECT_GE(s.u(arg, j), 0.0);
    // a v_j = sigma_j u_j pins the pairing of left and right signs.
    EXPECT_LE((a * s.v.col(j) - s.sigma[static_cast<std::size_t>(j)] * s.u.col(j)).norm(), 1e-10);
  }
  EXPECT_THROW(imc::truncated_svd(a, 0), imc::InvalidArgument);
  EXPECT_THROW(imc::truncated_svd(a, 7), imc::InvalidArgument);
}

TEST(ProjectPattern, Cases) {
  const DenseMatrix a = mat(2, 2, {1, 2, 3, 4});
  const std::vector<Entry> all = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  EXPECT_EQ(imc::project_pattern(a, all), a);
  EXPECT_EQ(imc::project_pattern(a, {}), DenseMatrix::Zero(2, 2));
  const std::vector<Entry> one = {{0, 1}};
  EXPECT_EQ(imc::project_pattern(a, one), mat(2, 2, {0, 2, 0, 0}));
  const std::vector<Entry> bad = {{2, 0}};
  EXPECT_THROW(imc::project_pattern(a, bad), imc::InvalidArgument);
}

TEST(Procrustes, IdentityAndRotation) {
  const DenseMatrix z = oracle::random_matrix(10, 3, 21);
  EXPECT_LE(imc::procrustes_align(z, z).distance, 1e-12);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const DenseMatrix r = oracle::random_orthogonal(3, 100 + s);
    const imc::AlignmentResult res = imc::procrustes_align(z, z * r);
    EXPECT_LE(res.distance, 1e-10);
    EXPECT_LE((res.rotation.transpose() * res.rotation - DenseMatrix::Identity(3, 3)).norm(), 1e-10);
  }
}

TEST(Procrustes, ScalarSignFlip) {
  const imc::AlignmentResult res =
      imc::procrustes_align(mat(2, 1, {1, 2}), mat(2, 1, {-1, -2}));
  EXPECT_NEAR(res.distance, 0.0, 1e-15);
  EXPECT_NEAR(res.rotation(0, 0), -1.0, 1e-15);
}

TEST(Procrustes, RankOneBruteForce) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const DenseMatrix z = oracle::random_matrix(7, 1, 2 * s), zs = oracle::random_matrix(7, 1, 2 * s + 1);
    const double brute = std::min((z - zs).norm(), (z + zs).norm());
    EXPECT_NEAR(imc::procrustes_align(z, zs).distance, brute, 1e-10);
  }
}

TEST(Procrustes, ReturnedRotationIsOptimal) {
  // No random orthogonal matrix does better than the returned one.
  const DenseMatrix z = oracle::random_matrix(12, 3, 5), zs = oracle::random_matrix(12, 3, 6);
  const imc::AlignmentResult res = imc::procrustes_align(z, zs);
  EXPECT_NEAR(res.distance, (z - zs * res.rotation).norm(), 1e-12);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const DenseMatrix r = oracle::random_orthogonal(3, 1000 + s);
    EXPECT_LE(res.distance, (z - zs * r).norm() + 1e-12);
  }
}

TEST(Procrustes, DimensionMismatch) {
  EXPECT_THROW(imc::procrustes_align(DenseMatrix::Zero(3, 2), DenseMatrix::Zero(4, 2)),
               imc::InvalidArgument);
}

TEST(PerturbationBound, HoldsOnRandomPairs) {
  int checked = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const int r = 1 + static_cast<int>(s % 4), rows = r + 3 + static_cast<int>(s % 7);
    DenseMatrix zp = oracle::random_matrix(rows, r, 3 * s);
    const double spec = oracle::singular_values(zp)[0];
    DenseMatrix h = oracle::random_matrix(rows, r, 3 * s + 1);
    h *= (0.25 * spec) * (static_cast<double>(s % 97) / 97.0) / h.norm();
    const DenseMatrix z = zp * oracle::random_orthogonal(r, 3 * s + 2) + h;
    const double d = imc::procrustes_align(z, zp).distance;
    ASSERT_LE(d, spec / 4.0);
    const double lhs = (z * z.transpose() - zp * zp.transpose()).norm();
    EXPECT_LE(lhs, 2.25 * spec * d * (1.0 + 1e-12) + 1e-13);
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(Rng, DeterministicAndInRange) {
  imc::Rng a(5), b(5);
  for (int k = 0; k < 100; ++k) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  imc::Rng c(9);
  for (int k = 0; k < 1000; ++k) EXPECT_LT(c.below(7), 7u);
  EXPECT_NE(imc::derive_seed(1, {0, 1}), imc::derive_seed(1, {1, 0}));
}

TEST(Rng, NormalMoments) {
  imc::Rng rng(123);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
}

}  // namespace
