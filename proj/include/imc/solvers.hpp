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

// LRSVRG-IMC and the two baselines (full-gradient GD-IMC and alternating
// least squares AM-IMC). All three share the configuration, the trace format
// and the effective-pass accounting: one pass is one traversal of |Omega|
// observed entries.

#ifndef IMC_SOLVERS_HPP_
#define IMC_SOLVERS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "imc/errors.hpp"
#include "imc/matrix.hpp"
#include "imc/metrics.hpp"
#include "imc/objective.hpp"
#include "imc/problem.hpp"
#include "imc/rng.hpp"

namespace imc {

enum class EpochOutput { kRandomIterate, kLastIterate };
enum class Projection { kOff, kRescale };
enum class Algorithm { kLrsvrg, kGd, kAm };

inline std::string_view to_string(EpochOutput e) {
  return e == EpochOutput::kRandomIterate ? "random" : "last";
}
inline std::string_view to_string(Projection p) {
  return p == Projection::kOff ? "off" : "rescale";
}
inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kLrsvrg: return "lrsvrg";
    case Algorithm::kGd: return "gd";
    case Algorithm::kAm: return "am";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view name) {
  if (name == "lrsvrg") return Algorithm::kLrsvrg;
  if (name == "gd") return Algorithm::kGd;
  if (name == "am") return Algorithm::kAm;
  throw InvalidArgument("unknown algorithm '" + std::string(name) +
                        "' (expected lrsvrg, gd or am)");
}

inline EpochOutput parse_epoch_output(std::string_view name) {
  if (name == "random") return EpochOutput::kRandomIterate;
  if (name == "last") return EpochOutput::kLastIterate;
  throw InvalidArgument("unknown epoch output '" + std::string(name) +
                        "' (expected random or last)");
}

inline Projection parse_projection(std::string_view name) {
  if (name == "off") return Projection::kOff;
  if (name == "rescale") return Projection::kRescale;
  throw InvalidArgument("unknown projection '" + std::string(name) +
                        "' (expected off or rescale)");
}

struct SvrgConfig {
  double tau = 0.0;
  int outer_epochs = 2000;
  int inner_steps = 0;  // 0: max(B, 10 r)
  int subsets = 0;      // B; 0 means max(n1, n2) when the caller builds Omega_t
  EpochOutput epoch_output = EpochOutput::kRandomIterate;
  Projection projection = Projection::kOff;
  double mu0 = 20.0;
  double sigma1_estimate = 1.0;
  std::uint64_t seed = 0;
  double stop_tol = 1e-3;
  double max_effective_passes = std::numeric_limits<double>::infinity();
};

struct ProblemInstance {
  GroundTruth truth;
  ObservationSet omega;
  Partition partition;

  Features features() const { return features_of(truth); }
};

struct EpochRecord {
  int epoch = 0;
  double rel_err = 0.0;
  double dist = 0.0;
  double objective = 0.0;
  double passes = 0.0;
  int projections = 0;  // rescale activations during this epoch
  int violations = 0;   // 1 if the epoch output lies outside C1 x C2
};

struct SolverReport {
  std::vector<EpochRecord> records;
  Factorization final;
  bool converged = false;
  int projection_activations = 0;
  int constraint_violations = 0;

  double final_rel_err() const { return records.back().rel_err; }
};

// min(1/(40 sigma_1 (4r + 1)), 1/(32 r sigma_r)).
inline double default_step_size(double sigma1, double sigma_r, int r) {
  if (!(sigma1 > 0.0) || !(sigma_r > 0.0)) {
    throw InvalidArgument("default_step_size: singular value estimates must be > 0");
  }
  if (r < 1) throw InvalidArgument("default_step_size: rank must be >= 1");
  return std::min(1.0 / (40.0 * sigma1 * (4.0 * r + 1.0)),
                  1.0 / (32.0 * r * sigma_r));
}

inline int default_inner_steps(int subsets, int r) {
  return std::max(subsets, 10 * r);
}

// Radii of C1 = {U : ||X_L U||_{2,inf} <= sqrt(mu0 r sigma1 / d1)} and C2.
struct ConstraintRadii {
  double u = 0.0;
  double v = 0.0;
};

inline ConstraintRadii constraint_radii(double mu0, int r, double sigma1,
                                        int d1, int d2) {
  return {std::sqrt(mu0 * r * sigma1 / d1), std::sqrt(mu0 * r * sigma1 / d2)};
}

namespace detail {

constexpr double kRadiusSlack = 1.0 + 1e-10;

inline bool rows_within(const DenseMatrix& w, double radius) {
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    if (w.row(i).norm() > radius * kRadiusSlack) return false;
  }
  return true;
}

// Row-rescaling surrogate for the projection onto {u : ||X u||_{2,inf} <= radius}.
// Returns true when u was modified.
inline bool rescale_into(DenseMatrix& u, const DenseMatrix& x, double radius) {
  constexpr int kMaxRounds = 3;
  for (int round = 0; round < kMaxRounds; ++round) {
    DenseMatrix w = x * u;
    bool violated = false;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const double norm = w.row(i).norm();
      if (norm > radius * kRadiusSlack) {
        w.row(i) *= radius / norm;
        violated = true;
      }
    }
    if (!violated) return round > 0;
    u = x.transpose() * w;
  }
  // Row rescaling through a non-square X does not always settle; a uniform
  // shrink always lands inside (the set is star-shaped about 0).
  const double worst = two_inf_norm(x * u);
  if (worst > radius * kRadiusSlack) u *= radius / worst;
  if (!rows_within(x * u, radius)) {
    throw NumericError("project_constraint: row bound still violated after rescaling");
  }
  return true;
}

inline bool outside_constraints(const Factorization& f, const Features& x,
                                ConstraintRadii radii) {
  return !rows_within(x.left * f.u, radii.u) ||
         !rows_within(x.right * f.v, radii.v);
}

inline void validate(const ProblemInstance& inst, const Factorization& init,
                     const SvrgConfig& cfg) {
  if (init.u.rows() != inst.truth.n1() || init.v.rows() != inst.truth.n2() ||
      init.u.cols() != init.v.cols()) {
    throw InvalidArgument("solver: initial factors do not match the instance");
  }
  if (!init.finite()) throw InvalidArgument("solver: non-finite initial factors");
  if (!(cfg.tau > 0.0)) throw InvalidArgument("solver: step size tau must be > 0");
  if (cfg.outer_epochs < 1) throw InvalidArgument("solver: epochs must be >= 1");
  if (cfg.inner_steps < 0) throw InvalidArgument("solver: inner steps must be >= 0");
  if (!(cfg.stop_tol > 0.0)) throw InvalidArgument("solver: stop tolerance must be > 0");
  if (!(cfg.max_effective_passes > 0.0)) {
    throw InvalidArgument("solver: pass budget must be > 0");
  }
  if (cfg.projection == Projection::kRescale && !(cfg.mu0 > 0.0 && cfg.sigma1_estimate > 0.0)) {
    throw InvalidArgument("solver: mu0 and sigma1 estimate must be > 0");
  }
}

// Shared bookkeeping for the three solvers.
class Tracker {
 public:
  Tracker(const ProblemInstance& inst, const SvrgConfig& cfg)
      : inst_(inst),
        cfg_(cfg),
        meter_(inst.truth),
        radii_(constraint_radii(cfg.mu0, inst.truth.rank, cfg.sigma1_estimate,
                                inst.truth.d1(), inst.truth.d2())) {}

  ConstraintRadii radii() const { return radii_; }
  double passes() const { return passes_; }

  bool affordable(double cost) const {
    return passes_ + cost <= cfg_.max_effective_passes * (1.0 + 1e-12);
  }

  // Appends a record; returns true when the stopping tolerance is met.
  bool log(int epoch, const Factorization& f, double cost, int projections) {
    passes_ += cost;
    EpochRecord rec;
    rec.epoch = epoch;
    rec.rel_err = meter_.relative_error(f);
    rec.dist = meter_.distance(f);
    rec.objective = objective(f, inst_.omega, inst_.features());
    rec.passes = passes_;
    rec.projections = projections;
    rec.violations = outside_constraints(f, inst_.features(), radii_) ? 1 : 0;
    report_.projection_activations += projections;
    report_.constraint_violations += rec.violations;
    report_.records.push_back(rec);
    if (rec.rel_err < cfg_.stop_tol) report_.converged = true;
    return report_.converged;
  }

  SolverReport finish(Factorization f) {
    report_.final = std::move(f);
    return std::move(report_);
  }

 private:
  const ProblemInstance& inst_;
  const SvrgConfig& cfg_;
  ErrorMeter meter_;
  ConstraintRadii radii_;
  double passes_ = 0.0;
  SolverReport report_;
};

}  // namespace detail

inline Factorization project_constraint(const Factorization& f,
                                        const Features& x, double radius_u,
                                        double radius_v) {
  if (!(radius_u > 0.0) || !(radius_v > 0.0)) {
    throw InvalidArgument("project_constraint: radii must be > 0");
  }
  Factorization out = f;
  detail::rescale_into(out.u, x.left, radius_u);
  detail::rescale_into(out.v, x.right, radius_v);
  return out;
}

// Algorithm: S outer epochs. Each builds the full-gradient anchor at the
// current point, takes m semi-stochastic steps on uniformly drawn subsets
//
//   U <- P_C1(U - tau G_U),  V <- P_C2(V - tau G_V)   (simultaneous update)
//
// and continues from a uniformly drawn stored inner iterate k' in [0, m) or
// from the last one. Randomness: the subset picks t_k, then k'.
inline SolverReport lrsvrg_solve(const ProblemInstance& inst,
                                 const Factorization& init,
                                 const SvrgConfig& cfg) {
  detail::validate(inst, init, cfg);
  const Features x = inst.features();
  const int b = inst.partition.count();
  const int m = cfg.inner_steps > 0 ? cfg.inner_steps
                                    : default_inner_steps(b, init.rank());
  const double epoch_cost = 1.0 + 2.0 * m / b;

  detail::Tracker tracker(inst, cfg);
  const ConstraintRadii radii = tracker.radii();
  Rng rng(cfg.seed);
  Factorization current = init;
  if (tracker.log(0, current, 0.0, 0)) return tracker.finish(current);

  std::vector<Factorization> stored;
  for (int s = 1; s <= cfg.outer_epochs; ++s) {
    if (!tracker.affordable(epoch_cost)) break;
    const EpochReference ref = make_epoch_reference(current, inst.omega, x);
    Factorization iterate = current;
    stored.clear();
    int projections = 0;
    for (int k = 0; k < m; ++k) {
      if (cfg.epoch_output == EpochOutput::kRandomIterate) stored.push_back(iterate);
      const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(b)));
      const GradientPair g =
          semi_stochastic_grad(iterate, ref, inst.omega, inst.partition, t, x);
      iterate.u -= cfg.tau * g.gu;
      iterate.v -= cfg.tau * g.gv;
      if (!iterate.finite()) throw DivergenceError(s);
      if (cfg.projection == Projection::kRescale) {
        const bool a = detail::rescale_into(iterate.u, x.left, radii.u);
        const bool c = detail::rescale_into(iterate.v, x.right, radii.v);
        projections += (a || c) ? 1 : 0;
      }
    }
    if (cfg.epoch_output == EpochOutput::kRandomIterate) {
      current = stored[rng.below(static_cast<std::uint64_t>(m))];
    } else {
      current = std::move(iterate);
    }
    if (tracker.log(s, current, epoch_cost, projections)) break;
  }
  return tracker.finish(std::move(current));
}

// Full-gradient descent with constant step; one epoch is one step.
inline SolverReport gd_imc_solve(const ProblemInstance& inst,
                                 const Factorization& init,
                                 const SvrgConfig& cfg) {
  detail::validate(inst, init, cfg);
  const Features x = inst.features();
  detail::Tracker tracker(inst, cfg);
  const ConstraintRadii radii = tracker.radii();
  Factorization current = init;
  if (tracker.log(0, current, 0.0, 0)) return tracker.finish(current);

  for (int s = 1; s <= cfg.outer_epochs; ++s) {
    if (!tracker.affordable(1.0)) break;
    const GradientPair g = grad_full(current, inst.omega, x);
    current.u -= cfg.tau * g.gu;
    current.v -= cfg.tau * g.gv;
    if (!current.finite()) throw DivergenceError(s);
    int projections = 0;
    if (cfg.projection == Projection::kRescale) {
      const bool a = detail::rescale_into(current.u, x.left, radii.u);
      const bool c = detail::rescale_into(current.v, x.right, radii.v);
      projections = (a || c) ? 1 : 0;
    }
    if (tracker.log(s, current, 1.0, projections)) break;
  }
  return tracker.finish(std::move(current));
}

namespace detail {

// Curvature below this (relative to |dir|^2) marks the subproblem singular.
constexpr double kAmSingular = 1e-10;

// Least squares over Omega for the free factor W with the other factor
// fixed:  min_W sum_(i,j) (x_row(i)^T W fixed_row(j) - L*_ij)^2,
// where free_features supplies x_row and fixed_image = (other features) *
// (other factor) supplies fixed_row. `transpose` selects which index of an
// entry addresses the free side. Solved by conjugate gradients on the normal
// equations, warm-started at w, and truncated once `allowance` passes are
// spent. Returns the number of passes over Omega.
inline int solve_block(DenseMatrix& w, const DenseMatrix& free_features,
                       const DenseMatrix& fixed_image,
                       const ObservationSet& omega, bool free_is_column,
                       double allowance) {
  const Eigen::Index r = w.cols();
  auto free_index = [&](const Entry& e) { return free_is_column ? e.col : e.row; };
  auto fixed_index = [&](const Entry& e) { return free_is_column ? e.row : e.col; };
  int passes = 0;

  // A rank-deficient fixed factor leaves the free factor undetermined.
  const Eigen::VectorXd fixed_sv = Eigen::JacobiSVD<DenseMatrix>(fixed_image).singularValues();
  if (!(fixed_sv(r - 1) > 1e-12 * fixed_sv(0))) {
    throw NumericError("am_imc_solve: singular least-squares subproblem");
  }

  auto apply = [&](const DenseMatrix& dir) {
    const DenseMatrix image = free_features * dir;
    DenseMatrix acc = DenseMatrix::Zero(free_features.rows(), r);
    for (std::size_t k = 0; k < omega.size(); ++k) {
      const Entry e = omega.indices[k];
      const auto fixed = fixed_image.row(fixed_index(e));
      const double s = image.row(free_index(e)).dot(fixed);
      acc.row(free_index(e)) += s * fixed;
    }
    ++passes;
    return DenseMatrix(free_features.transpose() * acc);
  };

  DenseMatrix acc = DenseMatrix::Zero(free_features.rows(), r);
  for (std::size_t k = 0; k < omega.size(); ++k) {
    const Entry e = omega.indices[k];
    acc.row(free_index(e)) += omega.values[k] * fixed_image.row(fixed_index(e));
  }
  ++passes;
  const DenseMatrix rhs = free_features.transpose() * acc;

  DenseMatrix res = rhs - apply(w);
  DenseMatrix dir = res;
  double rr = res.squaredNorm();
  const double target = 1e-24 * std::max(rhs.squaredNorm(), 1e-300);
  const int max_iter = 2 * static_cast<int>(w.size()) + 10;
  for (int it = 0; it < max_iter && rr > target && passes + 1 <= allowance; ++it) {
    const DenseMatrix ad = apply(dir);
    const double curvature = dir.cwiseProduct(ad).sum();
    if (!(curvature > kAmSingular * dir.squaredNorm())) {
      throw NumericError("am_imc_solve: singular least-squares subproblem");
    }
    const double alpha = rr / curvature;
    w += alpha * dir;
    res -= alpha * ad;
    const double rr_next = res.squaredNorm();
    dir = res + (rr_next / rr) * dir;
    rr = rr_next;
  }
  return passes;
}

}  // namespace detail

// Alternating minimization: each epoch solves for V with U fixed, then for U
// with V fixed. Every sweep over Omega (right-hand side and each CG product)
// counts as one effective pass; CG is cut short when the budget runs out.
inline SolverReport am_imc_solve(const ProblemInstance& inst,
                                 const Factorization& init,
                                 const SvrgConfig& cfg) {
  detail::validate(inst, init, cfg);
  const Features x = inst.features();
  detail::Tracker tracker(inst, cfg);
  Factorization current = init;
  if (tracker.log(0, current, 0.0, 0)) return tracker.finish(current);

  // Each block needs the right-hand side, the initial residual and one CG step.
  constexpr double kBlockMin = 3.0;
  for (int s = 1; s <= cfg.outer_epochs; ++s) {
    if (!tracker.affordable(2.0 * kBlockMin)) break;
    const double left = cfg.max_effective_passes - tracker.passes();
    int passes = detail::solve_block(current.v, x.right, x.left * current.u,
                                     inst.omega, /*free_is_column=*/true, left - kBlockMin);
    passes += detail::solve_block(current.u, x.left, x.right * current.v,
                                  inst.omega, /*free_is_column=*/false, left - passes);
    if (!current.finite()) throw DivergenceError(s);
    if (tracker.log(s, current, passes, 0)) break;
  }
  return tracker.finish(std::move(current));
}

inline SolverReport solve(Algorithm algo, const ProblemInstance& inst,
                          const Factorization& init, const SvrgConfig& cfg) {
  switch (algo) {
    case Algorithm::kLrsvrg: return lrsvrg_solve(inst, init, cfg);
    case Algorithm::kGd: return gd_imc_solve(inst, init, cfg);
    case Algorithm::kAm: return am_imc_solve(inst, init, cfg);
  }
  throw InvalidArgument("unknown algorithm");
}

}  // namespace imc

#endif  // IMC_SOLVERS_HPP_
