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

// imc: command-line driver.
//
//   imc generate|sample|init|solve|phase|converge --out DIR [flags]
//   imc <command> --manifest DIR/manifest.json --out DIR2
//   imc check
//
// Exit codes: 0 success, 1 usage or I/O error, 2 numeric failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "imc/errors.hpp"
#include "imc/experiments.hpp"
#include "imc/init.hpp"
#include "imc/io.hpp"
#include "imc/problem.hpp"
#include "imc/selfcheck.hpp"
#include "imc/solvers.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "imc 1.0.0";

// Every knob of every command. Negative tol / pass_budget / epochs mean
// "command default", resolved before anything runs or is recorded.
struct Options {
  int d1 = 200, d2 = 200, n1 = 20, n2 = 20, rank = 5;
  double cond = 2.0;
  std::uint64_t seed = 1;
  double sample_rate = 0.0;
  long long samples = 0;
  int subsets = 0;
  double tau = 0.0;
  std::vector<double> tau_mult = {32.0};
  int epochs = -1;
  int inner = 0;
  std::string algo = "lrsvrg";
  std::string epoch_output = "random";
  std::string projection = "off";
  double mu0 = 20.0;
  double tol = -1.0;
  double pass_budget = -1.0;  // 0: unlimited
  int trials = 10;
  bool init_full_omega = false;
  std::vector<std::string> datasets;
  std::vector<double> multiples = {1, 2, 3, 4, 5, 7, 10};
  std::vector<double> rates = {0.2, 0.3, 0.4};
  std::vector<std::string> algos = {"lrsvrg", "gd", "am"};
  double grid_step = 1.0;
};

void resolve_defaults(const std::string& cmd, Options& o) {
  const bool converge = cmd == "converge";
  if (o.epochs < 0) o.epochs = converge ? 1000000 : 2000;
  if (o.tol < 0.0) o.tol = converge ? 1e-6 : 1e-3;
  if (o.pass_budget < 0.0) o.pass_budget = converge ? 500.0 : 0.0;
  if (o.datasets.empty()) {
    for (const auto& ds : imc::reference_datasets()) o.datasets.push_back(ds.name());
  }
}

ordered_json to_json(const Options& o) {
  ordered_json j;
  j["d1"] = o.d1; j["d2"] = o.d2; j["n1"] = o.n1; j["n2"] = o.n2; j["rank"] = o.rank;
  j["cond"] = o.cond;
  j["sample_rate"] = o.sample_rate;
  j["samples"] = o.samples;
  j["subsets"] = o.subsets;
  j["tau"] = o.tau;
  j["tau_mult"] = o.tau_mult;
  j["epochs"] = o.epochs;
  j["inner"] = o.inner;
  j["algo"] = o.algo;
  j["epoch_output"] = o.epoch_output;
  j["projection"] = o.projection;
  j["mu0"] = o.mu0;
  j["tol"] = o.tol;
  j["pass_budget"] = o.pass_budget;
  j["trials"] = o.trials;
  j["init_full_omega"] = o.init_full_omega;
  j["datasets"] = o.datasets;
  j["multiples"] = o.multiples;
  j["rates"] = o.rates;
  j["algos"] = o.algos;
  j["grid_step"] = o.grid_step;
  return j;
}

Options from_json(const ordered_json& j) {
  Options o;
  try {
    j.at("d1").get_to(o.d1); j.at("d2").get_to(o.d2);
    j.at("n1").get_to(o.n1); j.at("n2").get_to(o.n2); j.at("rank").get_to(o.rank);
    j.at("cond").get_to(o.cond);
    j.at("sample_rate").get_to(o.sample_rate);
    j.at("samples").get_to(o.samples);
    j.at("subsets").get_to(o.subsets);
    j.at("tau").get_to(o.tau);
    j.at("tau_mult").get_to(o.tau_mult);
    j.at("epochs").get_to(o.epochs);
    j.at("inner").get_to(o.inner);
    j.at("algo").get_to(o.algo);
    j.at("epoch_output").get_to(o.epoch_output);
    j.at("projection").get_to(o.projection);
    j.at("mu0").get_to(o.mu0);
    j.at("tol").get_to(o.tol);
    j.at("pass_budget").get_to(o.pass_budget);
    j.at("trials").get_to(o.trials);
    j.at("init_full_omega").get_to(o.init_full_omega);
    j.at("datasets").get_to(o.datasets);
    j.at("multiples").get_to(o.multiples);
    j.at("rates").get_to(o.rates);
    j.at("algos").get_to(o.algos);
    j.at("grid_step").get_to(o.grid_step);
  } catch (const nlohmann::json::exception& e) {
    throw imc::IoError(std::string("manifest config: ") + e.what());
  }
  return o;
}

imc::Dimensions dims_of(const Options& o) { return {o.d1, o.d2, o.n1, o.n2, o.rank}; }

imc::TrialSettings settings_of(const Options& o) {
  imc::TrialSettings s;
  s.cond = o.cond;
  s.tau = o.tau;
  if (o.tau_mult.empty()) throw imc::InvalidArgument("--tau-mult needs at least one value");
  s.tau_mult = o.tau_mult.front();
  s.subsets = o.subsets;
  s.inner = o.inner;
  s.epoch_output = imc::parse_epoch_output(o.epoch_output);
  s.projection = imc::parse_projection(o.projection);
  s.mu0 = o.mu0;
  s.init_full_omega = o.init_full_omega;
  return s;
}

double budget_of(const Options& o) {
  return o.pass_budget > 0.0 ? o.pass_budget : std::numeric_limits<double>::infinity();
}

imc::SamplingRule sampling_of(const Options& o) {
  if (o.sample_rate > 0.0 && o.samples > 0) {
    throw imc::InvalidArgument("--sample-rate and --samples are mutually exclusive");
  }
  if (o.sample_rate > 0.0) return {o.sample_rate, 0};
  if (o.samples > 0) return {0.0, static_cast<std::size_t>(o.samples)};
  throw imc::InvalidArgument("this command needs --sample-rate or --samples");
}

// generate / sample / init share the trial seeding of `solve`, so their files
// describe exactly the objects a `solve` with the same flags works on.
imc::GroundTruth make_truth(const Options& o) {
  return imc::generate_instance(dims_of(o), o.cond, imc::derive_seed(o.seed, {0}));
}

imc::ObservationSet make_omega(const Options& o, const imc::GroundTruth& truth) {
  const imc::SamplingRule rule = sampling_of(o);
  const std::uint64_t s = imc::derive_seed(o.seed, {1});
  return rule.rate > 0.0 ? imc::bernoulli_sample(truth, rule.rate, s)
                         : imc::sample_fixed_count(truth, rule.count, s);
}

imc::DenseMatrix row_of(const std::vector<double>& v) {
  imc::DenseMatrix m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) m(0, static_cast<Eigen::Index>(k)) = v[k];
  return m;
}

void run_generate(const Options& o, const fs::path& out) {
  const imc::GroundTruth t = make_truth(o);
  imc::write_matrix(t.x_left, out / "x_left.txt");
  imc::write_matrix(t.x_right, out / "x_right.txt");
  imc::write_matrix(t.m_star, out / "m_star.txt");
  imc::write_matrix(t.l_star, out / "l_star.txt");
  imc::write_matrix(row_of(t.sigma), out / "sigma.txt");
}

void run_sample(const Options& o, const fs::path& out) {
  const imc::GroundTruth t = make_truth(o);
  imc::write_file_atomic(out / "observations.txt",
                         imc::format_observations(make_omega(o, t)));
}

void run_init(const Options& o, const fs::path& out) {
  const imc::Trial trial = imc::prepare_trial(dims_of(o), sampling_of(o), settings_of(o),
                                              o.seed, o.epochs, o.tol, budget_of(o));
  imc::write_matrix(trial.init.factors.u, out / "u0.txt");
  imc::write_matrix(trial.init.factors.v, out / "v0.txt");
  imc::write_matrix(row_of(trial.init.sigma), out / "sigma0.txt");
}

imc::Table trace_table(const imc::SolverReport& rep) {
  imc::Table t;
  t.header = {"epoch", "passes", "rel_err", "dist", "objective", "projections", "violations"};
  for (const imc::EpochRecord& r : rep.records) {
    t.rows.push_back({std::to_string(r.epoch), imc::format_number(r.passes),
                      imc::format_number(r.rel_err), imc::format_number(r.dist),
                      imc::format_number(r.objective), std::to_string(r.projections),
                      std::to_string(r.violations)});
  }
  return t;
}

// One run per --tau-mult value (a single run when --tau is given); with more
// than one value the sweep is tabulated and the lowest final error is kept.
void run_solve(const Options& o, const fs::path& out) {
  const imc::Algorithm algo = imc::parse_algorithm(o.algo);
  const std::vector<double> mults = o.tau > 0.0 ? std::vector<double>{0.0} : o.tau_mult;
  if (mults.empty()) throw imc::InvalidArgument("--tau-mult needs at least one value");

  imc::TrialSettings s = settings_of(o);
  imc::Trial trial = imc::prepare_trial(dims_of(o), sampling_of(o), s, o.seed, o.epochs,
                                        o.tol, budget_of(o));
  const double base_step = imc::default_step_size(trial.init.sigma.front(),
                                                  trial.init.sigma.back(), o.rank);
  imc::Table sweep;
  sweep.header = {"tau_mult", "tau", "converged", "final_rel_err", "epochs", "passes"};
  imc::SolverReport best;
  bool have_best = false;
  for (double mult : mults) {
    imc::SvrgConfig cfg = trial.config;
    if (o.tau <= 0.0) cfg.tau = mult * base_step;
    imc::SolverReport rep = imc::solve(algo, trial.instance, trial.init.factors, cfg);
    sweep.rows.push_back({imc::format_number(mult), imc::format_number(cfg.tau),
                          rep.converged ? "1" : "0", imc::format_number(rep.final_rel_err()),
                          std::to_string(rep.records.back().epoch),
                          imc::format_number(rep.records.back().passes)});
    if (!have_best || rep.final_rel_err() < best.final_rel_err()) {
      best = std::move(rep);
      have_best = true;
    }
  }
  imc::write_results(trace_table(best), out / "trace.csv");
  imc::write_matrix(best.final.u, out / "u.txt");
  imc::write_matrix(best.final.v, out / "v.txt");
  if (mults.size() > 1) imc::write_results(sweep, out / "sweep.csv");
}

void run_phase(const Options& o, const fs::path& out, int threads) {
  imc::PhaseConfig cfg;
  cfg.datasets.clear();
  for (const auto& name : o.datasets) cfg.datasets.push_back(imc::parse_dataset(name));
  cfg.multiples = o.multiples;
  cfg.trials = o.trials;
  cfg.threshold = o.tol;
  cfg.epoch_cap = o.epochs;
  cfg.base_seed = o.seed;
  cfg.solver = settings_of(o);
  cfg.threads = threads;
  const imc::PhaseResult res = imc::run_phase_transition(cfg);

  imc::Table detail;
  detail.header = {"dataset", "multiple", "trial", "success", "final_rel_err",
                   "epochs", "passes", "projections", "violations", "failure"};
  for (const imc::PhaseTrial& t : res.trials) {
    detail.rows.push_back({cfg.datasets[static_cast<std::size_t>(t.dataset)].name(),
                           imc::format_number(cfg.multiples[static_cast<std::size_t>(t.cell)]),
                           std::to_string(t.trial), t.success ? "1" : "0",
                           t.failure.empty() ? imc::format_number(t.final_rel_err) : "nan",
                           std::to_string(t.epochs), imc::format_number(t.passes),
                           std::to_string(t.projections), std::to_string(t.violations),
                           t.failure.empty() ? "" : "numeric"});
  }
  std::sort(detail.rows.begin(), detail.rows.end());
  imc::write_results(res.table(), out / "phase.csv");
  imc::write_results(detail, out / "phase_trials.csv");
}

void run_converge(const Options& o, const fs::path& out, int threads) {
  if (o.d1 != o.d2 || o.n1 != o.n2) {
    throw imc::InvalidArgument("converge: needs a square dataset (d1 = d2, n1 = n2)");
  }
  imc::ConvergenceConfig cfg;
  cfg.dataset = {o.d1, o.n1, o.rank};
  cfg.rates = o.rates;
  cfg.algorithms.clear();
  for (const auto& a : o.algos) cfg.algorithms.push_back(imc::parse_algorithm(a));
  cfg.pass_budget = budget_of(o);
  cfg.trials = o.trials;
  cfg.base_seed = o.seed;
  cfg.stop_tol = o.tol;
  cfg.epoch_cap = o.epochs;
  cfg.grid_step = o.grid_step;
  cfg.solver = settings_of(o);
  cfg.threads = threads;
  if (!std::isfinite(cfg.pass_budget)) {
    throw imc::InvalidArgument("converge: --pass-budget must be positive");
  }
  imc::write_results(imc::run_convergence_study(cfg).table(), out / "converge.csv");
}

int run_check() {
  bool all_ok = true;
  for (const imc::CheckResult& r : imc::run_self_checks()) {
    std::cout << r.name << (r.ok ? " ok" : " FAILED") << " (worst "
              << imc::format_number(r.value) << ", limit " << imc::format_number(r.threshold)
              << ")\n";
    all_ok = all_ok && r.ok;
  }
  return all_ok ? 0 : 2;
}

struct Command {
  CLI::App* app = nullptr;
  std::string name;
  std::string out;
  std::string manifest;
};

void add_knobs(CLI::App* app, Options& o) {
  app->add_option("--d1", o.d1, "rows of L*");
  app->add_option("--d2", o.d2, "columns of L*");
  app->add_option("--n1", o.n1, "left feature dimension");
  app->add_option("--n2", o.n2, "right feature dimension");
  app->add_option("--rank", o.rank, "rank r");
  app->add_option("--cond", o.cond, "condition number of M*");
  app->add_option("--seed", o.seed, "base seed");
  app->add_option("--sample-rate", o.sample_rate, "Bernoulli sampling rate p");
  app->add_option("--samples", o.samples, "exact number of observed entries");
  app->add_option("--subsets", o.subsets, "number of subsets B (0: max(n1, n2))");
  app->add_option("--tau", o.tau, "step size (overrides --tau-mult)");
  app->add_option("--tau-mult", o.tau_mult, "multiple(s) of the default step size")
      ->delimiter(',');
  app->add_option("--epochs", o.epochs, "outer epoch cap");
  app->add_option("--inner", o.inner, "inner steps m (0: max(B, 10 r))");
  app->add_option("--algo", o.algo, "solver")->check(CLI::IsMember({"lrsvrg", "gd", "am"}));
  app->add_option("--epoch-output", o.epoch_output, "epoch output")
      ->check(CLI::IsMember({"random", "last"}));
  app->add_option("--projection", o.projection, "constraint handling")
      ->check(CLI::IsMember({"off", "rescale"}));
  app->add_option("--mu0", o.mu0, "incoherence bound for the constraint radii");
  app->add_option("--tol", o.tol, "stopping / success threshold on relative error");
  app->add_option("--pass-budget", o.pass_budget, "effective-pass budget (0: unlimited)");
  app->add_option("--trials", o.trials, "trials per cell");
  app->add_flag("--init-full-omega", o.init_full_omega, "initialize from all of Omega");
  app->add_option("--datasets", o.datasets, "phase datasets, DxNxR")->delimiter(',');
  app->add_option("--multiples", o.multiples, "phase sample multiples")->delimiter(',');
  app->add_option("--rates", o.rates, "converge sample rates")->delimiter(',');
  app->add_option("--algos", o.algos, "converge algorithms")->delimiter(',');
  app->add_option("--grid-step", o.grid_step, "converge effective-pass grid spacing");
}

// Number of configuration flags given explicitly on the command line.
std::size_t explicit_knobs(const CLI::App* app) {
  std::size_t n = 0;
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_name();
    if (name == "--out" || name == "--manifest" || name == "--threads" || name == "--help") {
      continue;
    }
    n += opt->count();
  }
  return n;
}

int dispatch(const Command& cmd, Options opts, int threads) {
  if (cmd.name == "check") return run_check();

  if (!cmd.manifest.empty()) {
    if (explicit_knobs(cmd.app) > 0) {
      throw imc::InvalidArgument("--manifest cannot be combined with configuration flags");
    }
    const imc::RunManifest m = imc::read_manifest(cmd.manifest);
    if (m.command != cmd.name) {
      throw imc::InvalidArgument("manifest was written by '" + m.command + "', not '" +
                                 cmd.name + "'");
    }
    opts = from_json(m.config);
    opts.seed = m.seed;
  }
  resolve_defaults(cmd.name, opts);

  const fs::path out(cmd.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw imc::IoError("cannot create output directory " + out.string() + ": " + ec.message());

  if (cmd.name == "generate") run_generate(opts, out);
  else if (cmd.name == "sample") run_sample(opts, out);
  else if (cmd.name == "init") run_init(opts, out);
  else if (cmd.name == "solve") run_solve(opts, out);
  else if (cmd.name == "phase") run_phase(opts, out, threads);
  else if (cmd.name == "converge") run_converge(opts, out, threads);

  imc::RunManifest manifest;
  manifest.command = cmd.name;
  manifest.config = to_json(opts);
  manifest.seed = opts.seed;
  manifest.version = kVersion;
  imc::write_manifest(manifest, out / "manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inductive matrix completion with semi-stochastic gradients"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Options opts;
  int threads = 0;
  std::vector<Command> commands;
  const std::vector<std::pair<std::string, std::string>> specs = {
      {"generate", "write a synthetic instance"},
      {"sample", "write an observation set"},
      {"init", "write the spectral initialization"},
      {"solve", "run one solver"},
      {"phase", "phase-transition sweep"},
      {"converge", "convergence study"},
      {"check", "run the built-in oracle checks"}};
  commands.reserve(specs.size());
  for (const auto& [name, help] : specs) {
    Command cmd;
    cmd.name = name;
    cmd.app = app.add_subcommand(name, help);
    commands.push_back(cmd);
  }
  for (Command& cmd : commands) {
    if (cmd.name == "check") continue;
    add_knobs(cmd.app, opts);
    cmd.app->add_option("--out", cmd.out, "output directory")->required();
    cmd.app->add_option("--manifest", cmd.manifest, "re-run the configuration in a manifest");
    cmd.app->add_option("--threads", threads, "worker threads (0: all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "imc: usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    for (const Command& cmd : commands) {
      if (cmd.app->parsed()) return dispatch(cmd, opts, threads);
    }
    return 1;
  } catch (const imc::InvalidArgument& e) {
    std::cerr << "imc: usage error: " << e.what() << "\n";
    return 1;
  } catch (const imc::IoError& e) {
    std::cerr << "imc: i/o error: " << e.what() << "\n";
    return 1;
  } catch (const imc::NumericError& e) {
    std::cerr << "imc: numeric failure: " << e.what() << "\n";
    return 2;
  }
}
