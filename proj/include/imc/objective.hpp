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

// The factored objective
//
//   F(U, V) = 1/(2p) ||P_Omega(X_L U V^T X_R^T - L*)||_F^2
//             + 1/8 ||U^T U - V^T V||_F^2,
//
// its per-subset components F_t (p replaced by the subset rate), their
// gradients, and the variance-reduced gradient used by the SVRG solver.
//
// Nothing here forms a d1 x d2 matrix. The residual at an observed (i, j) is
// (row i of X_L U) . (row j of X_R V) - L*_ij and is contracted back through
// the features one entry at a time.

#ifndef IMC_OBJECTIVE_HPP_
#define IMC_OBJECTIVE_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "imc/errors.hpp"
#include "imc/matrix.hpp"
#include "imc/problem.hpp"

namespace imc {

struct Factorization {
  DenseMatrix u;  // n1 x r
  DenseMatrix v;  // n2 x r

  int rank() const { return static_cast<int>(u.cols()); }

  // Z = [U; V].
  DenseMatrix stacked() const {
    DenseMatrix z(u.rows() + v.rows(), u.cols());
    z.topRows(u.rows()) = u;
    z.bottomRows(v.rows()) = v;
    return z;
  }

  bool finite() const { return u.allFinite() && v.allFinite(); }
};

struct Features {
  const DenseMatrix& left;   // X_L, d1 x n1
  const DenseMatrix& right;  // X_R, d2 x n2
};

inline Features features_of(const GroundTruth& truth) {
  return {truth.x_left, truth.x_right};
}

struct GradientPair {
  DenseMatrix gu;
  DenseMatrix gv;
};

// Anchor of one SVRG epoch.
struct EpochReference {
  DenseMatrix u_tilde;
  DenseMatrix v_tilde;
  // L~ - L* at every observed position, unscaled. The anchor gradient
  // grad L_Omega(L~) is this vector divided by p, supported on Omega.
  std::vector<double> residual;
  double p = 0.0;
  // X_L^T grad L_Omega(L~) X_R, n1 x n2.
  DenseMatrix anchor_term;

  std::vector<double> anchor_residual() const {
    std::vector<double> scaled(residual);
    for (double& x : scaled) x /= p;
    return scaled;
  }
};

namespace detail {

inline void check_dims(const Factorization& f, const ObservationSet& omega,
                       const Features& x) {
  if (x.left.rows() != omega.rows || x.right.rows() != omega.cols ||
      f.u.rows() != x.left.cols() || f.v.rows() != x.right.cols() ||
      f.u.cols() != f.v.cols()) {
    throw InvalidArgument("objective: inconsistent dimensions");
  }
}

inline void check_subset(const Partition& part, int t) {
  if (t < 0 || t >= part.count()) {
    throw InvalidArgument("subset index " + std::to_string(t) +
                          " outside [0, " + std::to_string(part.count()) + ")");
  }
}

// Positions into Omega; an empty `list` with `all` set means every position.
struct Positions {
  std::span<const std::size_t> list;
  std::size_t all = 0;

  static Positions every(const ObservationSet& omega) {
    return {{}, omega.size()};
  }
  std::size_t size() const { return list.empty() ? all : list.size(); }
  std::size_t operator[](std::size_t k) const {
    return list.empty() ? k : list[k];
  }
};

inline double residual_at(const Vector& xu, const Vector& xv, double value) {
  return xu.dot(xv) - value;
}

// Computes gu = w X_L^T P(S) X_R V and gv = w X_R^T P(S)^T X_L U with
// S_k = residual_k - offset_k on the given positions. Returns sum_k S_k^2.
//
// Small position lists touch only the feature rows they need; large ones
// multiply the features through once.
inline double contract_residuals(const Factorization& f,
                                 const ObservationSet& omega, const Features& x,
                                 Positions pos, double weight,
                                 std::span<const double> offsets,
                                 DenseMatrix& gu, DenseMatrix& gv) {
  const Eigen::Index n1 = x.left.cols();
  const Eigen::Index n2 = x.right.cols();
  const Eigen::Index r = f.u.cols();
  gu.setZero(n1, r);
  gv.setZero(n2, r);
  double sum_sq = 0.0;

  const double per_entry_cost = static_cast<double>(pos.size()) * (n1 + n2);
  const double dense_cost = static_cast<double>(x.left.rows()) * n1 +
                            static_cast<double>(x.right.rows()) * n2;
  if (per_entry_cost < dense_cost) {
    Vector xu(r), xv(r);
    for (std::size_t k = 0; k < pos.size(); ++k) {
      const std::size_t at = pos[k];
      const Entry e = omega.indices[at];
      xu.noalias() = (x.left.row(e.row) * f.u).transpose();
      xv.noalias() = (x.right.row(e.col) * f.v).transpose();
      double s = residual_at(xu, xv, omega.values[at]);
      if (!offsets.empty()) s -= offsets[at];
      sum_sq += s * s;
      s *= weight;
      gu.noalias() += (s * x.left.row(e.row).transpose()) * xv.transpose();
      gv.noalias() += (s * x.right.row(e.col).transpose()) * xu.transpose();
    }
    return sum_sq;
  }

  const DenseMatrix xu = x.left * f.u;
  const DenseMatrix xv = x.right * f.v;
  DenseMatrix wl = DenseMatrix::Zero(xu.rows(), r);
  DenseMatrix wr = DenseMatrix::Zero(xv.rows(), r);
  for (std::size_t k = 0; k < pos.size(); ++k) {
    const std::size_t at = pos[k];
    const Entry e = omega.indices[at];
    double s = xu.row(e.row).dot(xv.row(e.col)) - omega.values[at];
    if (!offsets.empty()) s -= offsets[at];
    sum_sq += s * s;
    s *= weight;
    wl.row(e.row) += s * xv.row(e.col);
    wr.row(e.col) += s * xu.row(e.row);
  }
  gu.noalias() = x.left.transpose() * wl;
  gv.noalias() = x.right.transpose() * wr;
  return sum_sq;
}

inline double squared_residual(const Factorization& f,
                               const ObservationSet& omega, const Features& x,
                               Positions pos) {
  const DenseMatrix xu = x.left * f.u;
  const DenseMatrix xv = x.right * f.v;
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < pos.size(); ++k) {
    const std::size_t at = pos[k];
    const Entry e = omega.indices[at];
    const double s = xu.row(e.row).dot(xv.row(e.col)) - omega.values[at];
    sum_sq += s * s;
  }
  return sum_sq;
}

// Adds the balancing-penalty gradient: +U D / 2 to gu, -V D / 2 to gv,
// with D = U^T U - V^T V.
inline void add_penalty_gradient(const Factorization& f, GradientPair& g) {
  const DenseMatrix d = f.u.transpose() * f.u - f.v.transpose() * f.v;
  g.gu.noalias() += 0.5 * (f.u * d);
  g.gv.noalias() -= 0.5 * (f.v * d);
}

}  // namespace detail

// 1/(2p) ||P_Omega(X_L U V^T X_R^T - L*)||_F^2.
inline double loss_full(const Factorization& f, const ObservationSet& omega,
                        const Features& x) {
  detail::check_dims(f, omega, x);
  return detail::squared_residual(f, omega, x,
                                  detail::Positions::every(omega)) /
         (2.0 * omega.p);
}

// 1/8 ||U^T U - V^T V||_F^2.
inline double penalty(const Factorization& f) {
  const DenseMatrix d = f.u.transpose() * f.u - f.v.transpose() * f.v;
  return d.squaredNorm() / 8.0;
}

inline double objective(const Factorization& f, const ObservationSet& omega,
                        const Features& x) {
  return loss_full(f, omega, x) + penalty(f);
}

inline double objective_subset(const Factorization& f,
                               const ObservationSet& omega,
                               const Partition& part, int t,
                               const Features& x) {
  detail::check_dims(f, omega, x);
  detail::check_subset(part, t);
  const auto& subset = part.subsets[static_cast<std::size_t>(t)];
  return detail::squared_residual(f, omega, x, {subset, 0}) /
             (2.0 * part.rate) +
         penalty(f);
}

inline GradientPair grad_full(const Factorization& f,
                              const ObservationSet& omega, const Features& x) {
  detail::check_dims(f, omega, x);
  GradientPair g;
  detail::contract_residuals(f, omega, x, detail::Positions::every(omega),
                             1.0 / omega.p, {}, g.gu, g.gv);
  detail::add_penalty_gradient(f, g);
  return g;
}

inline GradientPair grad_subset(const Factorization& f,
                                const ObservationSet& omega,
                                const Partition& part, int t,
                                const Features& x) {
  detail::check_dims(f, omega, x);
  detail::check_subset(part, t);
  GradientPair g;
  detail::contract_residuals(f, omega, x,
                             {part.subsets[static_cast<std::size_t>(t)], 0},
                             1.0 / part.rate, {}, g.gu, g.gv);
  detail::add_penalty_gradient(f, g);
  return g;
}

// One pass over Omega plus one feature contraction.
inline EpochReference make_epoch_reference(const Factorization& f_tilde,
                                           const ObservationSet& omega,
                                           const Features& x) {
  detail::check_dims(f_tilde, omega, x);
  EpochReference ref;
  ref.u_tilde = f_tilde.u;
  ref.v_tilde = f_tilde.v;
  ref.p = omega.p;

  const DenseMatrix xu = x.left * f_tilde.u;
  const DenseMatrix xv = x.right * f_tilde.v;
  DenseMatrix t = DenseMatrix::Zero(x.left.rows(), x.right.cols());
  ref.residual.resize(omega.size());
  for (std::size_t k = 0; k < omega.size(); ++k) {
    const Entry e = omega.indices[k];
    const double s = xu.row(e.row).dot(xv.row(e.col)) - omega.values[k];
    ref.residual[k] = s;
    if (s != 0.0) t.row(e.row) += (s / omega.p) * x.right.row(e.col);
  }
  ref.anchor_term = x.left.transpose() * t;
  return ref;
}

// G_U = grad_U F_t(U, V) - X_L^T grad L_t(L~) X_R V + X_L^T grad L(L~) X_R V
// G_V = grad_V F_t(U, V) - X_R^T grad L_t(L~)^T X_L U + X_R^T grad L(L~)^T X_L U
//
// The anchor corrections multiply the current V and U, not the anchor's.
inline GradientPair semi_stochastic_grad(const Factorization& f,
                                         const EpochReference& ref,
                                         const ObservationSet& omega,
                                         const Partition& part, int t,
                                         const Features& x) {
  detail::check_dims(f, omega, x);
  detail::check_subset(part, t);
  GradientPair g;
  detail::contract_residuals(f, omega, x,
                             {part.subsets[static_cast<std::size_t>(t)], 0},
                             1.0 / part.rate, ref.residual, g.gu, g.gv);
  g.gu.noalias() += ref.anchor_term * f.v;
  g.gv.noalias() += ref.anchor_term.transpose() * f.u;
  detail::add_penalty_gradient(f, g);
  return g;
}

}  // namespace imc

#endif  // IMC_OBJECTIVE_HPP_
