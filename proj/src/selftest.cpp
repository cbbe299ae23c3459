#include "hdrisk/selftest.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "hdrisk/estimators.hpp"
#include "hdrisk/io.hpp"
#include "hdrisk/jacobians.hpp"
#include "hdrisk/losses.hpp"
#include "hdrisk/solvers.hpp"

namespace hdrisk {

namespace {

std::string fmt(double v) { return format_double(v); }

CheckResult guarded(const std::string& name, const std::function<CheckResult()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {name, false, std::string("exception: ") + e.what()};
  }
}

CheckResult check_losses() {
  double worst_lip = 0.0;
  bool monotone = true;
  bool range = true;
  for (LossKind kind : {LossKind::square, LossKind::huber, LossKind::smooth_huber0,
                        LossKind::smooth_huber1}) {
    const LossSpec loss{kind, 1.7};
    constexpr int kPoints = 10'000;
    const double lo = -10.0 * loss.scale;
    const double h = 20.0 * loss.scale / (kPoints - 1);
    LossValue prev = loss_eval(loss, lo);
    for (int k = 1; k < kPoints; ++k) {
      const LossValue cur = loss_eval(loss, lo + k * h);
      worst_lip = std::max(worst_lip, std::abs(cur.psi - prev.psi) / h);
      monotone = monotone && cur.psi >= prev.psi;
      range = range && cur.psi_prime >= 0.0 && cur.psi_prime <= 1.0;
      prev = cur;
    }
  }
  const bool ok = worst_lip <= 1.0 + 1e-12 && monotone && range;
  return {"losses: psi 1-Lipschitz, nondecreasing, psi' in [0,1]", ok,
          "max slope " + fmt(worst_lip)};
}

CheckResult check_kkt() {
  const Dataset data = random_instance(40, 60, 5, 11);
  const double scale = huber_scale_from_lambda_star(data.n(), 0.1);
  struct Case {
    LossSpec loss;
    PenaltySpec penalty;
  };
  const Case cases[] = {
      {LossSpec::square(), PenaltySpec::l1(0.1)},
      {LossSpec::huber(scale), PenaltySpec::l1(0.1)},
      {LossSpec::square(), PenaltySpec::elastic_net(0.1, 0.3)},
      {LossSpec::smooth_huber0(1.0), PenaltySpec::elastic_net(0.05, 0.2)},
      {LossSpec::smooth_huber1(1.0), PenaltySpec::l1(0.1)},
      {LossSpec::square(), PenaltySpec::nuclear(0.3, 6, 10)},
  };
  const SolverConfig cfg;
  double worst = 0.0;
  bool all_converged = true;
  for (const Case& c : cases) {
    const FitResult r = fit(c.loss, c.penalty, data, cfg);
    all_converged = all_converged && r.converged;
    worst = std::max(worst, kkt_gap(r, c.loss, c.penalty, data));
  }
  return {"solvers: converged fits satisfy KKT", all_converged && worst <= cfg.kkt_tol,
          "max gap " + fmt(worst)};
}

CheckResult check_estimator_identity() {
  const Dataset data = random_instance(60, 80, 8, 12);
  const LossSpec loss = LossSpec::square();
  const PenaltySpec penalty = PenaltySpec::l1(0.15);
  const FitResult r = fit(loss, penalty, data);
  const auto factors = closed_form_factors(r, loss, penalty, data);
  const RiskReport rep = square_loss_estimates(r, data, Covariance::identity(data.p()), factors);
  const double rel = std::abs(*rep.tau2_hat - (rep.r_hat + *rep.sigma2_hat)) / *rep.tau2_hat;
  return {"estimators: tau2_hat = r_hat + sigma2_hat", rel <= 1e-10, "relative error " + fmt(rel)};
}

CheckResult check_jacobian_psd() {
  const Dataset data = random_instance(20, 30, 4, 13);
  SolverConfig cfg;
  cfg.kkt_tol = 1e-13;
  const LossSpec loss = LossSpec::square();
  const PenaltySpec penalty = PenaltySpec::l1(0.2);
  const Matrix jac = fd_jacobian(psi_field(loss, penalty, data.X, cfg), data.y,
                                 default_fd_step(data.y));
  const double asym = (jac - jac.transpose()).cwiseAbs().maxCoeff();
  const Matrix sym = 0.5 * (jac + jac.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const bool ok = asym <= 1e-5 && lo >= -1e-6 && hi <= 1.0 + 1e-6;
  return {"jacobians: d psi_hat/dy symmetric PSD with norm <= 1", ok,
          "asymmetry " + fmt(asym) + ", eigenvalues in [" + fmt(lo) + ", " + fmt(hi) + "]"};
}

CheckResult check_augmented() {
  const Dataset data = random_instance(20, 30, 3, 14);
  const double lambda = 0.1;
  const double lambda_star = 0.15;
  const LossSpec loss = LossSpec::huber(huber_scale_from_lambda_star(data.n(), lambda_star));
  SolverConfig cfg;
  cfg.kkt_tol = 1e-11;
  cfg.algorithm = Algorithm::augmented_lasso;
  const FitResult a = fit(loss, PenaltySpec::l1(lambda), data, cfg);
  cfg.algorithm = Algorithm::fista;
  const FitResult b = fit(loss, PenaltySpec::l1(lambda), data, cfg);
  const double diff = (a.beta_hat - b.beta_hat).cwiseAbs().maxCoeff();
  return {"solvers: augmented Lasso matches direct Huber solve", diff <= 1e-6,
          "sup-norm difference " + fmt(diff)};
}

CheckResult check_elastic_net_fd() {
  const Dataset data = random_instance(20, 25, 4, 15);
  SolverConfig cfg;
  cfg.kkt_tol = 1e-13;
  const LossSpec loss = LossSpec::huber(1.0);
  const PenaltySpec penalty = PenaltySpec::elastic_net(0.1, 0.2);
  const FitResult r = fit(loss, penalty, data, cfg);
  const auto closed = closed_form_factors(r, loss, penalty, data);
  const double h = default_fd_step(data.y);
  const double df_fd =
      fd_jacobian(fitted_values_field(loss, penalty, data.X, cfg, r.beta_hat), data.y, h).trace();
  const double tr_fd =
      fd_jacobian(psi_field(loss, penalty, data.X, cfg, r.beta_hat), data.y, h).trace();
  const double err = std::max(std::abs(df_fd - closed.df_hat), std::abs(tr_fd - closed.trace_dpsi));
  return {"jacobians: elastic-net closed form matches finite differences", err <= 1e-3,
          "max trace error " + fmt(err)};
}

CheckResult check_monte_carlo() {
  const Dataset data = random_instance(40, 50, 5, 16);
  const LossSpec loss = LossSpec::square();
  const PenaltySpec penalty = PenaltySpec::l1(0.15);
  const SolverConfig cfg;
  const FitResult r = fit(loss, penalty, data, cfg);
  const auto closed = closed_form_factors(r, loss, penalty, data);
  RngStream rng(17, 0);
  const auto mc = mc_factors(r, loss, penalty, data, cfg, kDefaultMcScale, kDefaultMcProbes, rng);
  const double z = std::abs(mc.df_hat - closed.df_hat) / *mc.df_std_err;
  return {"jacobians: Monte Carlo df_hat agrees with closed form", z <= 4.0,
          "|difference| / std_err = " + fmt(z)};
}

}  // namespace

Dataset random_instance(Index n, Index p, Index s, std::uint64_t seed, double amplitude,
                        double sigma) {
  RngStream rng(seed, 0);
  Vector beta = Vector::Zero(p);
  beta.head(std::min(s, p)).setConstant(amplitude);
  auto cov = std::make_shared<const Covariance>(Covariance::identity(p));
  return gen_dataset(n, cov, beta, GaussianNoise{sigma}, rng).first;
}

std::vector<CheckResult> run_selftest() {
  std::vector<CheckResult> out;
  out.push_back(guarded("losses", check_losses));
  out.push_back(guarded("kkt", check_kkt));
  out.push_back(guarded("estimator identity", check_estimator_identity));
  out.push_back(guarded("jacobian psd", check_jacobian_psd));
  out.push_back(guarded("augmented lasso", check_augmented));
  out.push_back(guarded("elastic-net fd", check_elastic_net_fd));
  out.push_back(guarded("monte carlo", check_monte_carlo));
  return out;
}

bool report_checks(std::ostream& out, const std::vector<CheckResult>& checks) {
  bool all = true;
  for (const auto& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) out << " (" << c.detail << ")";
    out << '\n';
    all = all && c.passed;
  }
  return all;
}

}  // namespace hdrisk
