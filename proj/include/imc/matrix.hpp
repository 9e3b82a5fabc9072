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

// Dense linear-algebra kernels shared by every solver: norms,
// orthonormalization, truncated SVD, sparse-pattern projection and
// orthogonal Procrustes alignment.

#ifndef IMC_MATRIX_HPP_
#define IMC_MATRIX_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "imc/errors.hpp"
#include "imc/rng.hpp"

namespace imc {

using DenseMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// One observed position (row, col) of a d1 x d2 matrix.
struct Entry {
  int row = 0;
  int col = 0;
  friend bool operator==(const Entry&, const Entry&) = default;
  friend auto operator<=>(const Entry&, const Entry&) = default;
};

struct SvdTriplet {
  DenseMatrix u;              // rows x k, orthonormal columns
  std::vector<double> sigma;  // nonincreasing, nonnegative
  DenseMatrix v;              // cols x k, orthonormal columns
};

struct AlignmentResult {
  DenseMatrix rotation;  // r x r orthogonal
  double distance = 0.0;
};

inline bool all_finite(const DenseMatrix& a) { return a.allFinite(); }

inline double frobenius_norm(const DenseMatrix& a) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    sum += a.data()[i] * a.data()[i];
  }
  return std::sqrt(sum);
}

// Largest singular value by power iteration on a^T a. Stops when the
// Rayleigh quotient changes by less than tol relative to itself.
inline double spectral_norm(const DenseMatrix& a, double tol = 1e-10,
                            int max_iter = 10000) {
  if (!(tol > 0.0)) throw InvalidArgument("spectral_norm: tol must be > 0");
  if (a.size() == 0) return 0.0;
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  const DenseMatrix b = a / scale;

  Rng rng(0x5eed5eedULL);
  Vector x(b.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = 1.0 + 0.1 * rng.normal();
  x.normalize();

  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector y = b.transpose() * (b * x);
    const double next = x.dot(y);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;  // x landed in the null space of b
    x = y / norm;
    if (it > 0 && std::abs(next - lambda) <= tol * std::abs(next)) {
      return scale * std::sqrt(std::max(next, 0.0));
    }
    lambda = next;
  }
  throw NumericError("spectral_norm: power iteration did not converge in " +
                     std::to_string(max_iter) + " iterations");
}

// ||a||_{2,inf}: the largest Euclidean row norm.
inline double two_inf_norm(const DenseMatrix& a) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    best = std::max(best, a.row(i).norm());
  }
  return best;
}

// Householder QR with the sign of R's diagonal forced positive, so the result
// is unique. Throws on numerically rank-deficient input.
inline DenseMatrix orthonormalize(const DenseMatrix& a) {
  if (a.rows() < a.cols() || a.cols() == 0) {
    throw InvalidArgument("orthonormalize: need rows >= cols >= 1, got " +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()));
  }
  Eigen::MatrixXd work = a;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(work);
  const Eigen::MatrixXd r =
      qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  const Eigen::VectorXd diag = r.diagonal();
  const double lead = diag.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < diag.size(); ++j) {
    if (!(std::abs(diag(j)) > 1e-12 * lead)) {
      throw NumericError("orthonormalize: input is rank deficient (pivot " +
                         std::to_string(j) + ")");
    }
  }
  Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (diag(j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

// Top-k singular triplets. Each left singular vector is signed so that its
// largest-magnitude entry is nonnegative; the right vector follows.
inline SvdTriplet truncated_svd(const DenseMatrix& a, int k) {
  const Eigen::Index min_dim = std::min(a.rows(), a.cols());
  if (k < 1 || k > min_dim) {
    throw InvalidArgument("truncated_svd: k=" + std::to_string(k) +
                          " outside [1, " + std::to_string(min_dim) + "]");
  }
  const Eigen::MatrixXd work = a;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(work,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw NumericError("truncated_svd: SVD did not converge");
  }
  SvdTriplet out;
  out.u = svd.matrixU().leftCols(k);
  out.v = svd.matrixV().leftCols(k);
  out.sigma.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    out.sigma[static_cast<std::size_t>(j)] = svd.singularValues()(j);
    Eigen::Index arg = 0;
    out.u.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.u(arg, j) < 0.0) {
      out.u.col(j) = -out.u.col(j);
      out.v.col(j) = -out.v.col(j);
    }
  }
  return out;
}

// P_omega(a): entries listed in omega are copied, all others are zero.
inline DenseMatrix project_pattern(const DenseMatrix& a,
                                   std::span<const Entry> omega) {
  DenseMatrix out = DenseMatrix::Zero(a.rows(), a.cols());
  for (const Entry& e : omega) {
    if (e.row < 0 || e.row >= a.rows() || e.col < 0 || e.col >= a.cols()) {
      throw InvalidArgument("project_pattern: index (" +
                            std::to_string(e.row) + ", " +
                            std::to_string(e.col) + ") out of bounds");
    }
    out(e.row, e.col) = a(e.row, e.col);
  }
  return out;
}

// argmin over r x r orthogonal R of ||z - z_star R||_F, via the SVD of
// z_star^T z = A S B^T, R = A B^T. Reflections are allowed.
inline AlignmentResult procrustes_align(const DenseMatrix& z,
                                        const DenseMatrix& z_star) {
  if (z.rows() != z_star.rows() || z.cols() != z_star.cols()) {
    throw InvalidArgument("procrustes_align: dimension mismatch");
  }
  if (z.cols() < 1) throw InvalidArgument("procrustes_align: no columns");
  const Eigen::MatrixXd cross = z_star.transpose() * z;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  AlignmentResult out;
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  out.distance = frobenius_norm(z - z_star * out.rotation);
  return out;
}

}  // namespace imc

#endif  // IMC_MATRIX_HPP_
