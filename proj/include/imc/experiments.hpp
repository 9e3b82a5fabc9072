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

// Synthetic experiments: the phase-transition sweep over sample counts and
// the convergence study over sample rates and algorithms.
//
// Seeding: every trial owns the seed derive_seed(base, {dataset, cell, trial})
// where `cell` is the multiple index (phase) or the rate index (convergence).
// Within a trial, the instance, the observations, the partition, the
// initializer and the solver draw from children {0}, {1}, {2}, {3}, {4} of
// that seed. Trials run in parallel; results are stored by trial index and
// sorted before they are emitted.

#ifndef IMC_EXPERIMENTS_HPP_
#define IMC_EXPERIMENTS_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "imc/errors.hpp"
#include "imc/init.hpp"
#include "imc/io.hpp"
#include "imc/metrics.hpp"
#include "imc/objective.hpp"
#include "imc/problem.hpp"
#include "imc/solvers.hpp"

namespace imc {

// Square synthetic dataset: d1 = d2 = d, n1 = n2 = n, rank r.
struct DatasetSpec {
  int d = 0;
  int n = 0;
  int r = 0;

  std::string name() const {
    return std::to_string(d) + "x" + std::to_string(n) + "x" + std::to_string(r);
  }
  Dimensions dims() const { return {d, d, n, n, r}; }
  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

inline std::vector<DatasetSpec> reference_datasets() {
  return {{200, 20, 5}, {200, 40, 3}, {500, 50, 3}, {500, 25, 4}};
}

inline DatasetSpec parse_dataset(const std::string& text) {
  DatasetSpec ds;
  char x1 = 0, x2 = 0;
  std::istringstream in(text);
  if (!(in >> ds.d >> x1 >> ds.n >> x2 >> ds.r) || x1 != 'x' || x2 != 'x' ||
      !in.eof()) {
    throw InvalidArgument("dataset must look like DxNxR, got '" + text + "'");
  }
  return ds;
}

// ceil(multiple * n * r * ln n).
inline std::size_t samples_for_multiple(double multiple, int n, int r) {
  return static_cast<std::size_t>(
      std::ceil(multiple * n * r * std::log(static_cast<double>(n))));
}

// Solver knobs shared by every trial of an experiment.
struct TrialSettings {
  double cond = 2.0;
  double tau = 0.0;        // > 0 overrides the rule below
  double tau_mult = 32.0;  // tau = tau_mult * default_step_size(init sigmas)
  int subsets = 0;         // 0: max(n1, n2)
  int inner = 0;           // 0: max(B, 10 r)
  EpochOutput epoch_output = EpochOutput::kRandomIterate;
  Projection projection = Projection::kOff;
  double mu0 = 20.0;
  bool init_full_omega = false;
};

// How a trial observes L*.
struct SamplingRule {
  double rate = 0.0;       // Bernoulli(rate) when > 0
  std::size_t count = 0;   // otherwise exactly `count` entries
};

struct Trial {
  ProblemInstance instance;
  Initialization init;
  SvrgConfig config;
};

inline Trial prepare_trial(const Dimensions& dims, const SamplingRule& sampling,
                           const TrialSettings& s, std::uint64_t trial_seed,
                           int epochs, double stop_tol, double pass_budget) {
  Trial trial;
  ProblemInstance& inst = trial.instance;
  inst.truth = generate_instance(dims, s.cond, derive_seed(trial_seed, {0}));
  inst.omega = sampling.rate > 0.0
                   ? bernoulli_sample(inst.truth, sampling.rate, derive_seed(trial_seed, {1}))
                   : sample_fixed_count(inst.truth, sampling.count, derive_seed(trial_seed, {1}));
  const int b = s.subsets > 0 ? s.subsets : std::max(inst.truth.n1(), inst.truth.n2());
  inst.partition = partition_observations(inst.omega, b, derive_seed(trial_seed, {2}));
  trial.init = initialize(inst.omega, inst.partition, inst.features(), dims.rank,
                          derive_seed(trial_seed, {3}), s.init_full_omega);

  SvrgConfig& cfg = trial.config;
  cfg.tau = s.tau > 0.0 ? s.tau
                        : s.tau_mult * default_step_size(trial.init.sigma.front(),
                                                         trial.init.sigma.back(), dims.rank);
  cfg.outer_epochs = epochs;
  cfg.inner_steps = s.inner;
  cfg.subsets = b;
  cfg.epoch_output = s.epoch_output;
  cfg.projection = s.projection;
  cfg.mu0 = s.mu0;
  cfg.sigma1_estimate = trial.init.sigma.front();
  cfg.seed = derive_seed(trial_seed, {4});
  cfg.stop_tol = stop_tol;
  cfg.max_effective_passes = pass_budget;
  return trial;
}

template <typename T>
bool has_duplicates(const std::vector<T>& items) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      if (items[i] == items[j]) return true;
    }
  }
  return false;
}

// Runs fn(0) ... fn(count - 1) on up to `threads` workers (0: all cores).
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& fn) {
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < count; i = next++) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Phase transition.

struct PhaseConfig {
  std::vector<DatasetSpec> datasets = reference_datasets();
  std::vector<double> multiples = {1, 2, 3, 4, 5, 7, 10};
  int trials = 10;
  double threshold = 1e-3;
  int epoch_cap = 2000;
  std::uint64_t base_seed = 1;
  TrialSettings solver;
  int threads = 0;
};

struct PhaseTrial {
  int dataset = 0;
  int cell = 0;
  int trial = 0;
  bool success = false;
  double final_rel_err = 0.0;
  int epochs = 0;
  double passes = 0.0;
  int projections = 0;
  int violations = 0;
  std::string failure;  // numeric failure message, if any
};

struct PhaseRow {
  DatasetSpec dataset;
  double multiple = 0.0;
  std::size_t samples = 0;
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
};

struct PhaseResult {
  std::vector<PhaseRow> rows;
  std::vector<PhaseTrial> trials;

  Table table() const {
    Table t;
    t.header = {"dataset", "d", "n", "r", "multiple", "samples",
                "trials", "successes", "success_rate"};
    for (const PhaseRow& row : rows) {
      t.rows.push_back({row.dataset.name(), std::to_string(row.dataset.d),
                        std::to_string(row.dataset.n), std::to_string(row.dataset.r),
                        format_number(row.multiple), std::to_string(row.samples),
                        std::to_string(row.trials), std::to_string(row.successes),
                        format_number(row.success_rate)});
    }
    return t;
  }

  const PhaseRow* find(const DatasetSpec& ds, double multiple) const {
    for (const PhaseRow& row : rows) {
      if (row.dataset == ds && row.multiple == multiple) return &row;
    }
    return nullptr;
  }
};

inline void validate(const PhaseConfig& cfg) {
  if (cfg.datasets.empty()) throw InvalidArgument("phase: no datasets");
  if (cfg.multiples.empty()) throw InvalidArgument("phase: no multiples");
  for (double m : cfg.multiples) {
    if (!(m > 0.0)) throw InvalidArgument("phase: multiples must be positive");
  }
  if (cfg.trials < 1) throw InvalidArgument("phase: trials must be >= 1");
  if (has_duplicates(cfg.multiples)) throw InvalidArgument("phase: repeated multiple");
  if (has_duplicates(cfg.datasets)) throw InvalidArgument("phase: repeated dataset");
  if (!(cfg.threshold > 0.0)) throw InvalidArgument("phase: threshold must be > 0");
  for (const DatasetSpec& ds : cfg.datasets) {
    for (double m : cfg.multiples) {
      const std::size_t need = samples_for_multiple(m, ds.n, ds.r);
      if (need > static_cast<std::size_t>(ds.d) * ds.d) {
        throw InvalidArgument("phase: multiple " + format_number(m) + " asks for " +
                              std::to_string(need) + " samples but " + ds.name() +
                              " has only " + std::to_string(ds.d * ds.d) + " entries");
      }
    }
  }
}

inline PhaseResult run_phase_transition(const PhaseConfig& cfg) {
  validate(cfg);
  const std::size_t per_dataset = cfg.multiples.size() * static_cast<std::size_t>(cfg.trials);
  std::vector<PhaseTrial> outcomes(cfg.datasets.size() * per_dataset);

  parallel_for(outcomes.size(), cfg.threads, [&](std::size_t idx) {
    PhaseTrial& out = outcomes[idx];
    out.dataset = static_cast<int>(idx / per_dataset);
    out.cell = static_cast<int>((idx % per_dataset) / cfg.trials);
    out.trial = static_cast<int>(idx % cfg.trials);
    const DatasetSpec& ds = cfg.datasets[static_cast<std::size_t>(out.dataset)];
    const double multiple = cfg.multiples[static_cast<std::size_t>(out.cell)];
    const std::uint64_t seed =
        derive_seed(cfg.base_seed, {static_cast<std::uint64_t>(out.dataset),
                                    static_cast<std::uint64_t>(out.cell),
                                    static_cast<std::uint64_t>(out.trial)});
    try {
      const Trial trial = prepare_trial(
          ds.dims(), {0.0, samples_for_multiple(multiple, ds.n, ds.r)}, cfg.solver, seed,
          cfg.epoch_cap, cfg.threshold, std::numeric_limits<double>::infinity());
      const SolverReport rep = lrsvrg_solve(trial.instance, trial.init.factors, trial.config);
      out.success = rep.converged;
      out.final_rel_err = rep.final_rel_err();
      out.epochs = rep.records.back().epoch;
      out.passes = rep.records.back().passes;
      out.projections = rep.projection_activations;
      out.violations = rep.constraint_violations;
    } catch (const NumericError& e) {
      out.success = false;
      out.failure = e.what();
    }
  });

  PhaseResult result;
  result.trials = outcomes;
  for (std::size_t di = 0; di < cfg.datasets.size(); ++di) {
    for (std::size_t ci = 0; ci < cfg.multiples.size(); ++ci) {
      PhaseRow row;
      row.dataset = cfg.datasets[di];
      row.multiple = cfg.multiples[ci];
      row.samples = samples_for_multiple(row.multiple, row.dataset.n, row.dataset.r);
      row.trials = cfg.trials;
      for (const PhaseTrial& t : outcomes) {
        if (t.dataset == static_cast<int>(di) && t.cell == static_cast<int>(ci) && t.success) {
          ++row.successes;
        }
      }
      row.success_rate = static_cast<double>(row.successes) / row.trials;
      result.rows.push_back(row);
    }
  }
  std::sort(result.rows.begin(), result.rows.end(), [](const PhaseRow& a, const PhaseRow& b) {
    return std::tuple(a.dataset.name(), a.dataset.d, a.dataset.n, a.dataset.r, a.multiple) <
           std::tuple(b.dataset.name(), b.dataset.d, b.dataset.n, b.dataset.r, b.multiple);
  });
  return result;
}

// ---------------------------------------------------------------------------
// Convergence study.

struct ConvergenceConfig {
  DatasetSpec dataset{200, 20, 5};
  std::vector<double> rates = {0.2, 0.3, 0.4};
  std::vector<Algorithm> algorithms = {Algorithm::kLrsvrg, Algorithm::kGd, Algorithm::kAm};
  double pass_budget = 500.0;
  int trials = 10;
  std::uint64_t base_seed = 1;
  double stop_tol = 1e-6;
  int epoch_cap = 1000000;
  double grid_step = 1.0;  // spacing of the effective-pass grid
  TrialSettings solver;
  int threads = 0;
};

struct ConvergenceRun {
  int rate_index = 0;
  int trial = 0;
  Algorithm algo = Algorithm::kLrsvrg;
  std::vector<EpochRecord> records;
  bool converged = false;
  int projections = 0;
  std::string failure;

  double final_rel_err() const {
    return records.empty() ? std::numeric_limits<double>::infinity()
                           : records.back().rel_err;
  }
};

struct ConvergenceRow {
  double p = 0.0;
  Algorithm algo = Algorithm::kLrsvrg;
  int trial = 0;
  double pass = 0.0;
  double rel_err = 0.0;
  double dist = 0.0;
};

// Step-resamples a trace onto {0, step, 2 step, ...} up to its last record:
// each grid point takes the latest record at or before it. The final record is
// appended when it falls between grid points.
inline std::vector<EpochRecord> resample_trace(const std::vector<EpochRecord>& records,
                                               double step) {
  std::vector<EpochRecord> out;
  if (records.empty()) return out;
  const double last = records.back().passes;
  std::size_t at = 0;
  for (long long k = 0;; ++k) {
    const double g = static_cast<double>(k) * step;
    if (g > last) break;
    while (at + 1 < records.size() && records[at + 1].passes <= g) ++at;
    EpochRecord rec = records[at];
    rec.passes = g;
    out.push_back(rec);
  }
  if (out.back().passes < last) out.push_back(records.back());
  return out;
}

struct ConvergenceResult {
  DatasetSpec dataset;
  std::vector<double> rates;
  std::vector<ConvergenceRun> runs;
  std::vector<ConvergenceRow> rows;

  Table table() const {
    Table t;
    t.header = {"dataset", "p", "algo", "trial", "pass", "log2_rel_err", "rel_err", "dist"};
    for (const ConvergenceRow& row : rows) {
      t.rows.push_back({dataset.name(), format_number(row.p), std::string(to_string(row.algo)),
                        std::to_string(row.trial), format_number(row.pass),
                        format_number(std::log2(row.rel_err)), format_number(row.rel_err),
                        format_number(row.dist)});
    }
    return t;
  }

  std::vector<const ConvergenceRun*> select(int rate_index, Algorithm algo) const {
    std::vector<const ConvergenceRun*> out;
    for (const ConvergenceRun& run : runs) {
      if (run.rate_index == rate_index && run.algo == algo) out.push_back(&run);
    }
    return out;
  }
};

inline ConvergenceResult run_convergence_study(const ConvergenceConfig& cfg) {
  if (cfg.rates.empty() || cfg.algorithms.empty()) {
    throw InvalidArgument("converge: need at least one rate and one algorithm");
  }
  for (double p : cfg.rates) {
    if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("converge: rates must lie in (0, 1]");
  }
  if (has_duplicates(cfg.rates)) throw InvalidArgument("converge: repeated rate");
  if (has_duplicates(cfg.algorithms)) throw InvalidArgument("converge: repeated algorithm");
  if (!(cfg.pass_budget > 0.0)) throw InvalidArgument("converge: pass budget must be > 0");
  if (cfg.trials < 1) throw InvalidArgument("converge: trials must be >= 1");
  if (!(cfg.grid_step > 0.0)) throw InvalidArgument("converge: grid step must be > 0");

  const std::size_t n_algo = cfg.algorithms.size();
  const std::size_t cells = cfg.rates.size() * static_cast<std::size_t>(cfg.trials);
  std::vector<ConvergenceRun> runs(cells * n_algo);

  // One task per (rate, trial): all algorithms share instance and init.
  parallel_for(cells, cfg.threads, [&](std::size_t cell) {
    const int rate_index = static_cast<int>(cell / cfg.trials);
    const int trial_index = static_cast<int>(cell % cfg.trials);
    const std::uint64_t seed =
        derive_seed(cfg.base_seed, {0, static_cast<std::uint64_t>(rate_index),
                                    static_cast<std::uint64_t>(trial_index)});
    std::string setup_failure;
    Trial trial;
    try {
      trial = prepare_trial(cfg.dataset.dims(), {cfg.rates[static_cast<std::size_t>(rate_index)], 0},
                            cfg.solver, seed, cfg.epoch_cap, cfg.stop_tol, cfg.pass_budget);
    } catch (const NumericError& e) {
      setup_failure = e.what();
    }
    for (std::size_t a = 0; a < n_algo; ++a) {
      ConvergenceRun& run = runs[cell * n_algo + a];
      run.rate_index = rate_index;
      run.trial = trial_index;
      run.algo = cfg.algorithms[a];
      if (!setup_failure.empty()) {
        run.failure = setup_failure;
        continue;
      }
      try {
        const SolverReport rep = solve(run.algo, trial.instance, trial.init.factors, trial.config);
        run.records = rep.records;
        run.converged = rep.converged;
        run.projections = rep.projection_activations;
      } catch (const NumericError& e) {
        run.failure = e.what();
      }
    }
  });

  ConvergenceResult result;
  result.dataset = cfg.dataset;
  result.rates = cfg.rates;
  result.runs = runs;
  for (const ConvergenceRun& run : runs) {
    for (const EpochRecord& rec : resample_trace(run.records, cfg.grid_step)) {
      result.rows.push_back({cfg.rates[static_cast<std::size_t>(run.rate_index)], run.algo,
                             run.trial, rec.passes, rec.rel_err, rec.dist});
    }
  }
  std::sort(result.rows.begin(), result.rows.end(),
            [](const ConvergenceRow& a, const ConvergenceRow& b) {
              return std::tuple(a.p, to_string(a.algo), a.trial, a.pass) <
                     std::tuple(b.p, to_string(b.algo), b.trial, b.pass);
            });
  return result;
}

// Least-squares line through (x, y): slope and coefficient of determination.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit fit;
  fit.points = x.size();
  if (x.size() < 2) return fit;
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace imc

#endif  // IMC_EXPERIMENTS_HPP_
