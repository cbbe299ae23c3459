#include "hdrisk/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hdrisk/errors.hpp"
#include "hdrisk/estimators.hpp"
#include "hdrisk/harness.hpp"
#include "hdrisk/io.hpp"
#include "hdrisk/jacobians.hpp"
#include "hdrisk/selftest.hpp"
#include "hdrisk/solvers.hpp"

namespace hdrisk {

namespace {

using nlohmann::json;

struct FitOptions {
  std::string data;
  std::string loss = "square";
  std::optional<double> scale;
  std::optional<double> lambda_star;
  std::string penalty = "l1";
  double lambda = 0.1;
  double mu = 0.0;
  Index rows = 0;
  Index cols = 0;
  std::string algorithm = "auto";
  double kkt_tol = 1e-8;
  int max_iters = 50'000;
  std::string out;
};

struct EstimateOptions {
  std::string sigma;
  std::string jacobian = "closed_form";
  double mc_a = kDefaultMcScale;
  int mc_m = kDefaultMcProbes;
  std::uint64_t seed = 0;
  std::optional<double> sigma2;
};

struct ExperimentOptions {
  std::string config;
  std::string experiment;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool paper_scale = false;
  bool no_timing = false;
};

void add_fit_options(CLI::App* cmd, FitOptions& o) {
  cmd->add_option("--data", o.data, "dataset CSV, y in the first column")->required();
  cmd->add_option("--loss", o.loss, "square | huber | smooth_huber0 | smooth_huber1");
  cmd->add_option("--scale", o.scale, "loss scale");
  cmd->add_option("--lambda-star", o.lambda_star, "huber scale given as sqrt(n) * lambda_star");
  cmd->add_option("--penalty", o.penalty, "none | l1 | elastic_net | nuclear");
  cmd->add_option("--lambda", o.lambda, "penalty level");
  cmd->add_option("--mu", o.mu, "ridge weight of elastic_net");
  cmd->add_option("--rows", o.rows, "matrix rows for nuclear");
  cmd->add_option("--cols", o.cols, "matrix columns for nuclear");
  cmd->add_option("--algorithm", o.algorithm, "auto | coordinate_descent | fista | augmented_lasso");
  cmd->add_option("--kkt-tol", o.kkt_tol);
  cmd->add_option("--max-iters", o.max_iters);
  cmd->add_option("--out", o.out, "write the JSON summary here instead of stdout");
}

struct Problem {
  Dataset data;
  LossSpec loss;
  PenaltySpec penalty;
  SolverConfig cfg;
};

Problem build_problem(const FitOptions& o) {
  Problem pb;
  pb.data = read_dataset_csv(o.data);
  pb.loss = LossSpec{loss_kind_from_string(o.loss), 1.0};
  if (o.scale && o.lambda_star) throw ValidationError("--scale and --lambda-star are exclusive");
  if (o.scale) pb.loss.scale = *o.scale;
  if (o.lambda_star) {
    if (!(*o.lambda_star > 0.0)) throw ValidationError("--lambda-star must be > 0");
    pb.loss.scale = huber_scale_from_lambda_star(pb.data.n(), *o.lambda_star);
  }
  pb.loss.validate();
  pb.penalty = PenaltySpec{penalty_kind_from_string(o.penalty), o.lambda, o.mu, o.rows, o.cols};
  if (pb.penalty.kind == PenaltyKind::none) pb.penalty.lambda = 0.0;
  pb.penalty.validate(pb.data.p());
  pb.cfg.kkt_tol = o.kkt_tol;
  pb.cfg.max_iters = o.max_iters;
  pb.cfg.algorithm = algorithm_from_string(o.algorithm);
  pb.cfg.validate();
  return pb;
}

json fit_summary(const Problem& pb, const FitResult& r) {
  json doc;
  doc["n"] = pb.data.n();
  doc["p"] = pb.data.p();
  doc["loss"] = std::string(to_string(pb.loss.kind));
  doc["scale"] = pb.loss.scale;
  doc["penalty"] = std::string(to_string(pb.penalty.kind));
  doc["lambda"] = pb.penalty.lambda;
  doc["mu"] = pb.penalty.mu;
  doc["algorithm"] = std::string(to_string(r.algorithm));
  doc["converged"] = r.converged;
  doc["iterations"] = r.iterations;
  doc["kkt_gap"] = r.kkt_gap;
  doc["objective"] = objective(pb.loss, pb.penalty, pb.data, r.beta_hat);
  doc["n_active"] = r.active_set.size();
  doc["n_inliers"] = r.inlier_set.size();
  doc["active_set"] = r.active_set;
  doc["beta_hat"] = std::vector<double>(r.beta_hat.begin(), r.beta_hat.end());
  return doc;
}

void emit(const json& doc, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << doc.dump(2) << '\n';
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open '" + path + "' for writing");
  file << doc.dump(2) << '\n';
  if (!file) throw Error("failed writing '" + path + "'");
}

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  const Problem pb = build_problem(o);
  const FitResult r = fit(pb.loss, pb.penalty, pb.data, pb.cfg);
  emit(fit_summary(pb, r), o.out, out);
  if (!r.converged) {
    err << "error: solver did not converge (kkt gap " << format_double(r.kkt_gap) << " after "
        << r.iterations << " iterations)\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_estimate(const FitOptions& o, const EstimateOptions& e, std::ostream& out) {
  const Problem pb = build_problem(o);
  const Covariance sigma =
      e.sigma.empty() ? Covariance::identity(pb.data.p()) : Covariance(read_matrix_csv(e.sigma));
  if (sigma.dim() != pb.data.p()) {
    throw DimensionMismatch("--sigma is " + std::to_string(sigma.dim()) + "x" +
                            std::to_string(sigma.dim()) + ", expected p = " +
                            std::to_string(pb.data.p()));
  }
  if (e.sigma2 && !(*e.sigma2 > 0.0)) throw ValidationError("--sigma2 must be > 0");

  const FitResult r = fit(pb.loss, pb.penalty, pb.data, pb.cfg);
  require_converged(r);

  JacobianFactors factors;
  if (e.jacobian == "closed_form") {
    factors = closed_form_factors(r, pb.loss, pb.penalty, pb.data);
  } else if (e.jacobian == "monte_carlo") {
    if (!(e.mc_a > 0.0)) throw ValidationError("--mc-a must be > 0");
    if (e.mc_m < 1) throw ValidationError("--mc-m must be >= 1");
    RngStream rng(e.seed, 0);
    factors = mc_factors(r, pb.loss, pb.penalty, pb.data, pb.cfg, e.mc_a, e.mc_m, rng);
  } else {
    throw ValidationError("--jacobian must be closed_form or monte_carlo");
  }

  const RiskReport rep = pb.loss.kind == LossKind::square
                             ? square_loss_estimates(r, pb.data, sigma, factors)
                             : hat_r(r, pb.data, sigma, factors);

  json doc = fit_summary(pb, r);
  json report;
  report["r_hat"] = rep.r_hat;
  report["tau2_hat"] = rep.tau2_hat ? json(*rep.tau2_hat) : json(nullptr);
  report["sigma2_hat"] = rep.sigma2_hat ? json(*rep.sigma2_hat) : json(nullptr);
  report["sure"] = e.sigma2 ? json(sure(r, factors.df_hat, *e.sigma2)) : json(nullptr);
  report["df_hat"] = factors.df_hat;
  report["trace_dpsi"] = factors.trace_dpsi;
  report["factor"] = rep.factor;
  report["degenerate"] = rep.degenerate;
  report["jacobian"] = e.jacobian;
  if (factors.method == FactorMethod::monte_carlo) {
    report["mc_a"] = factors.mc_a;
    report["mc_m"] = factors.mc_m;
    report["df_std_err"] = factors.df_std_err.value_or(std::nan(""));
    report["trace_std_err"] = factors.trace_std_err.value_or(std::nan(""));
  }
  doc["report"] = report;
  emit(doc, o.out, out);
  return kExitOk;
}

std::optional<int> threads_from_env() {
  const char* raw = std::getenv("HDRISK_THREADS");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const int v = std::stoi(raw, &used);
    if (used != std::string(raw).size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("HDRISK_THREADS: expected an integer, got '" + std::string(raw) + "'");
  }
}

int cmd_experiment(const ExperimentOptions& o, std::ostream& out, std::ostream& err) {
  if (o.config.empty() == o.experiment.empty()) {
    throw ValidationError("experiment needs exactly one of --config or --experiment");
  }
  json doc;
  if (!o.config.empty()) {
    std::ifstream file(o.config);
    if (!file) throw Error("cannot open config '" + o.config + "'");
    try {
      doc = json::parse(file);
    } catch (const json::parse_error& e) {
      throw ValidationError("config: " + std::string(e.what()));
    }
  } else {
    doc = json{{"experiment", o.experiment}};
  }
  ExperimentConfig cfg = config_from_json(doc, o.paper_scale);
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.threads) {
    cfg.threads = *o.threads;
  } else if (auto env = threads_from_env()) {
    cfg.threads = *env;
  }
  if (o.no_timing) cfg.record_timing = false;
  cfg.validate();

  const std::vector<ResultRow> rows = run_experiment(cfg);
  for (const ResultRow& row : rows) {
    if (!row.reason.empty()) {
      err << "warning: rep " << row.rep << " lambda " << format_double(row.lambda);
      if (row.lambda_star) err << " lambda_star " << format_double(*row.lambda_star);
      err << ": " << row.reason << '\n';
    }
  }
  if (o.out.empty()) {
    write_csv(out, rows);
  } else {
    std::ofstream file(o.out, std::ios::binary);
    if (!file) throw Error("cannot open '" + o.out + "' for writing");
    write_csv(file, rows);
    if (!file) throw Error("failed writing '" + o.out + "'");
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"High-dimensional out-of-sample risk estimation", "hdrisk"};
  app.require_subcommand(1);

  FitOptions fit_opts;
  auto* fit_cmd = app.add_subcommand("fit", "fit a penalized M-estimator and print a JSON summary");
  add_fit_options(fit_cmd, fit_opts);

  FitOptions est_fit_opts;
  EstimateOptions est_opts;
  auto* est_cmd = app.add_subcommand("estimate", "fit and estimate the out-of-sample error");
  add_fit_options(est_cmd, est_fit_opts);
  est_cmd->add_option("--sigma", est_opts.sigma, "p x p covariance CSV (default identity)");
  est_cmd->add_option("--jacobian", est_opts.jacobian, "closed_form | monte_carlo");
  est_cmd->add_option("--mc-a", est_opts.mc_a, "Monte Carlo perturbation scale");
  est_cmd->add_option("--mc-m", est_opts.mc_m, "Monte Carlo probe count");
  est_cmd->add_option("--seed", est_opts.seed, "seed of the Monte Carlo probes");
  est_cmd->add_option("--sigma2", est_opts.sigma2, "known noise variance, enables SURE");

  ExperimentOptions exp_opts;
  auto* exp_cmd = app.add_subcommand("experiment", "run a simulation study and write CSV rows");
  exp_cmd->add_option("--config", exp_opts.config, "JSON config");
  exp_cmd->add_option("--experiment", exp_opts.experiment,
                      "run the defaults of huber_grid | nuclear_norm | ols_calibration | "
                      "sigma_recovery");
  exp_cmd->add_option("--out", exp_opts.out, "CSV output path (default stdout)");
  exp_cmd->add_option("--seed", exp_opts.seed, "master seed");
  exp_cmd->add_option("--threads", exp_opts.threads, "worker threads (fallback HDRISK_THREADS)");
  exp_cmd->add_flag("--paper-scale", exp_opts.paper_scale, "full published sizes (slow)");
  exp_cmd->add_flag("--no-timing", exp_opts.no_timing, "write wall_ms as 0 for reproducible output");

  auto* self_cmd = app.add_subcommand("selftest", "run the invariant suites");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit_opts, out, err);
    if (est_cmd->parsed()) return cmd_estimate(est_fit_opts, est_opts, out);
    if (exp_cmd->parsed()) return cmd_experiment(exp_opts, out, err);
    if (self_cmd->parsed()) return report_checks(out, run_selftest()) ? kExitOk : kExitRuntime;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DimensionMismatch& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace hdrisk
