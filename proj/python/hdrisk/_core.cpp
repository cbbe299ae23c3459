#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hdrisk/errors.hpp"
#include "hdrisk/estimators.hpp"
#include "hdrisk/harness.hpp"
#include "hdrisk/jacobians.hpp"
#include "hdrisk/losses.hpp"
#include "hdrisk/selftest.hpp"
#include "hdrisk/solvers.hpp"

namespace py = pybind11;
using namespace hdrisk;

namespace {

Dataset make_dataset(const Matrix& X, const Vector& y) {
  Dataset d{X, y};
  d.validate();
  return d;
}

LossSpec make_loss(const std::string& kind, double scale) {
  LossSpec loss{loss_kind_from_string(kind), scale};
  loss.validate();
  return loss;
}

PenaltySpec make_penalty(const std::string& kind, double lam, double mu, Index rows, Index cols,
                         Index p) {
  PenaltySpec pen{penalty_kind_from_string(kind), lam, mu, rows, cols};
  if (pen.kind == PenaltyKind::none) pen.lambda = 0.0;
  pen.validate(p);
  return pen;
}

SolverConfig make_solver(double kkt_tol, int max_iters, const std::string& algorithm) {
  SolverConfig cfg;
  cfg.kkt_tol = kkt_tol;
  cfg.max_iters = max_iters;
  cfg.algorithm = algorithm_from_string(algorithm);
  cfg.validate();
  return cfg;
}

py::dict fit_dict(const FitResult& r) {
  py::dict out;
  out["beta_hat"] = r.beta_hat;
  out["residual"] = r.residual;
  out["psi_hat"] = r.psi_hat;
  out["psi_prime_hat"] = r.psi_prime_hat;
  out["active_set"] = r.active_set;
  out["inlier_set"] = r.inlier_set;
  out["kkt_gap"] = r.kkt_gap;
  out["iterations"] = r.iterations;
  out["converged"] = r.converged;
  out["algorithm"] = std::string(to_string(r.algorithm));
  return out;
}

py::dict row_dict(const ResultRow& r) {
  py::dict out;
  out["rep"] = r.rep;
  out["grid_index"] = r.grid_index;
  out["lambda"] = r.lambda;
  out["lambda_star"] = r.lambda_star;
  out["oos_error"] = r.oos_error;
  out["r_hat"] = r.r_hat;
  out["tau2_hat"] = r.tau2_hat;
  out["sigma2_hat"] = r.sigma2_hat;
  out["sigma2_star"] = r.sigma2_star;
  out["df_hat"] = r.df_hat;
  out["trace_dpsi"] = r.trace_dpsi;
  out["n_active"] = r.n_active;
  out["n_inliers"] = r.n_inliers;
  out["kkt_gap"] = r.kkt_gap;
  out["degenerate"] = r.degenerate;
  out["wall_ms"] = r.wall_ms;
  out["reason"] = r.reason;
  return out;
}

}  // namespace

PYBIND11_MODULE(_hdrisk, m) {
  m.doc() = "Out-of-sample risk estimates for penalized M-estimators";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", PyExc_ValueError);
  py::register_exception<NonPositiveDefinite>(m, "NonPositiveDefinite", base.ptr());
  py::register_exception<NoClosedForm>(m, "NoClosedForm", base.ptr());
  py::register_exception<DegenerateFactor>(m, "DegenerateFactor", base.ptr());
  py::register_exception<NotConverged>(m, "NotConverged", base.ptr());

  m.attr("RESULT_CSV_HEADER") = kResultCsvHeader;

  m.def(
      "loss_eval",
      [](const std::string& kind, double scale, const Vector& u) {
        const LossValues v = loss_eval_vec(make_loss(kind, scale), u);
        return py::make_tuple(v.rho, v.psi, v.psi_prime);
      },
      py::arg("kind"), py::arg("scale"), py::arg("u"),
      "(rho, psi, psi') of a loss evaluated componentwise.");

  m.def(
      "fit",
      [](const Matrix& X, const Vector& y, const std::string& loss, double scale,
         const std::string& penalty, double lam, double mu, Index rows, Index cols,
         double kkt_tol, int max_iters, const std::string& algorithm) {
        const Dataset d = make_dataset(X, y);
        const FitResult r = fit(make_loss(loss, scale), make_penalty(penalty, lam, mu, rows, cols, d.p()),
                                d, make_solver(kkt_tol, max_iters, algorithm));
        return fit_dict(r);
      },
      py::arg("X"), py::arg("y"), py::arg("loss") = "square", py::arg("scale") = 1.0,
      py::arg("penalty") = "l1", py::arg("lam") = 0.1, py::arg("mu") = 0.0, py::arg("rows") = 0,
      py::arg("cols") = 0, py::arg("kkt_tol") = 1e-8, py::arg("max_iters") = 50'000,
      py::arg("algorithm") = "auto",
      "Penalized M-estimator; returns a dict with beta_hat, psi_hat, sets and diagnostics.");

  m.def(
      "estimate",
      [](const Matrix& X, const Vector& y, const std::string& loss, double scale,
         const std::string& penalty, double lam, double mu, Index rows, Index cols,
         std::optional<Matrix> sigma, const std::string& jacobian, double mc_a, int mc_m,
         std::uint64_t seed, double kkt_tol) {
        const Dataset d = make_dataset(X, y);
        const LossSpec l = make_loss(loss, scale);
        const PenaltySpec pen = make_penalty(penalty, lam, mu, rows, cols, d.p());
        const SolverConfig cfg = make_solver(kkt_tol, 50'000, "auto");
        const Covariance cov = sigma ? Covariance(*sigma) : Covariance::identity(d.p());
        const FitResult r = fit(l, pen, d, cfg);
        require_converged(r);
        JacobianFactors f;
        if (jacobian == "closed_form") {
          f = closed_form_factors(r, l, pen, d);
        } else if (jacobian == "monte_carlo") {
          RngStream rng(seed, 0);
          f = mc_factors(r, l, pen, d, cfg, mc_a, mc_m, rng);
        } else {
          throw ValidationError("jacobian must be closed_form or monte_carlo");
        }
        const RiskReport rep = l.kind == LossKind::square ? square_loss_estimates(r, d, cov, f)
                                                          : hat_r(r, d, cov, f);
        py::dict out = fit_dict(r);
        out["r_hat"] = rep.r_hat;
        out["tau2_hat"] = rep.tau2_hat;
        out["sigma2_hat"] = rep.sigma2_hat;
        out["df_hat"] = f.df_hat;
        out["trace_dpsi"] = f.trace_dpsi;
        out["df_std_err"] = f.df_std_err;
        out["trace_std_err"] = f.trace_std_err;
        out["factor"] = rep.factor;
        out["degenerate"] = rep.degenerate;
        return out;
      },
      py::arg("X"), py::arg("y"), py::arg("loss") = "square", py::arg("scale") = 1.0,
      py::arg("penalty") = "l1", py::arg("lam") = 0.1, py::arg("mu") = 0.0, py::arg("rows") = 0,
      py::arg("cols") = 0, py::arg("sigma") = std::nullopt, py::arg("jacobian") = "closed_form",
      py::arg("mc_a") = kDefaultMcScale, py::arg("mc_m") = kDefaultMcProbes, py::arg("seed") = 0,
      py::arg("kkt_tol") = 1e-8,
      "Fit, then the risk report (r_hat; tau2_hat and sigma2_hat for the square loss).\n"
      "sigma defaults to the identity.");

  m.def(
      "huber_scale_from_lambda_star",
      [](Index n, double lambda_star) { return huber_scale_from_lambda_star(n, lambda_star); },
      py::arg("n"), py::arg("lambda_star"));

  m.def(
      "random_instance",
      [](Index n, Index p, Index s, std::uint64_t seed, double amplitude, double sigma) {
        const Dataset d = random_instance(n, p, s, seed, amplitude, sigma);
        return py::make_tuple(d.X, d.y);
      },
      py::arg("n"), py::arg("p"), py::arg("s"), py::arg("seed"), py::arg("amplitude") = 1.0,
      py::arg("sigma") = 1.0);

  m.def(
      "default_config",
      [](const std::string& experiment, bool paper_scale) {
        const auto kind = experiment_kind_from_string(experiment);
        return config_to_json(paper_scale ? paper_scale_config(kind) : default_config(kind)).dump();
      },
      py::arg("experiment"), py::arg("paper_scale") = false,
      "Default configuration as a JSON string.");

  m.def(
      "run_experiment",
      [](const std::string& config_json, std::optional<int> threads) {
        nlohmann::json doc;
        try {
          doc = nlohmann::json::parse(config_json);
        } catch (const nlohmann::json::parse_error& e) {
          throw ValidationError(std::string("config: ") + e.what());
        }
        ExperimentConfig cfg = config_from_json(doc);
        if (threads) cfg.threads = *threads;
        cfg.validate();
        std::vector<ResultRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_experiment(cfg);
        }
        py::list out;
        for (const auto& r : rows) out.append(row_dict(r));
        return out;
      },
      py::arg("config_json"), py::arg("threads") = std::nullopt,
      "Run a simulation study from a JSON config; one dict per (rep, grid point).");

  m.def(
      "experiment_csv",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = config_from_json(nlohmann::json::parse(config_json));
        std::vector<ResultRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_experiment(cfg);
        }
        std::ostringstream out;
        write_csv(out, rows);
        return out.str();
      },
      py::arg("config_json"));

  m.def("selftest", [] {
    py::list out;
    for (const auto& c : run_selftest()) out.append(py::make_tuple(c.name, c.passed, c.detail));
    return out;
  });
}
