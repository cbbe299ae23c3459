#include "hdrisk/jacobians.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <string>

#include "hdrisk/errors.hpp"
#include "hdrisk/io.hpp"

namespace hdrisk {

namespace {

constexpr double kPerturbedKktTol = 1e-10;
constexpr double kPinvCutoff = 1e-12;

/// tr[M^{-1} A] and tr[M^{-1} B] for M = A + shift I, A, B symmetric.
/// Falls back to a pseudo-inverse when shift == 0.
std::pair<double, double> shifted_traces(const Matrix& A, const Matrix& B, double shift) {
  if (A.rows() == 0) return {0.0, 0.0};
  Matrix M = A;
  M.diagonal().array() += shift;
  if (shift > 0.0) {
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() == Eigen::Success) {
      return {llt.solve(A).trace(), llt.solve(B).trace()};
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
  const Vector& w = eig.eigenvalues();
  const double top = w.cwiseAbs().maxCoeff();
  Vector inv = Vector::Zero(w.size());
  for (Index i = 0; i < w.size(); ++i) {
    if (w[i] > kPinvCutoff * top) inv[i] = 1.0 / w[i];
  }
  const Matrix& V = eig.eigenvectors();
  const Matrix pinv = V * inv.asDiagonal() * V.transpose();
  return {(pinv * A).trace(), (pinv * B).trace()};
}

JacobianFactors elastic_net_factors(const FitResult& fit, double mu, const Dataset& data) {
  const Index n = data.n();
  const auto k = static_cast<Index>(fit.active_set.size());
  Matrix xs(n, k);
  for (Index c = 0; c < k; ++c) xs.col(c) = data.X.col(fit.active_set[static_cast<std::size_t>(c)]);
  const Vector& d = fit.psi_prime_hat;
  const Matrix dx = d.asDiagonal() * xs;
  const Matrix a = xs.transpose() * dx;  // X_S' D X_S
  const Matrix b = dx.transpose() * dx;  // X_S' D^2 X_S
  const auto [df, correction] = shifted_traces(a, b, double(n) * mu);
  JacobianFactors out;
  out.df_hat = df;
  out.trace_dpsi = d.sum() - correction;
  out.method = FactorMethod::closed_form;
  return out;
}

}  // namespace

JacobianFactors closed_form_factors(const FitResult& fit, const LossSpec& loss,
                                    const PenaltySpec& penalty, const Dataset& data) {
  if (fit.beta_hat.size() != data.p() || fit.psi_prime_hat.size() != data.n()) {
    throw DimensionMismatch("closed_form_factors: fit does not match the dataset");
  }
  const double n = double(data.n());
  const double active = double(fit.active_set.size());
  JacobianFactors out;
  out.method = FactorMethod::closed_form;

  if (penalty.kind == PenaltyKind::elastic_net) {
    return elastic_net_factors(fit, penalty.mu, data);
  }
  if (loss.kind == LossKind::square && penalty.kind == PenaltyKind::none) {
    if (data.p() >= data.n()) {
      throw NoClosedForm("least squares without penalty needs p < n");
    }
    out.df_hat = double(data.p());
    out.trace_dpsi = n - double(data.p());
    return out;
  }
  if (loss.kind == LossKind::square && penalty.kind == PenaltyKind::l1) {
    out.df_hat = active;
    out.trace_dpsi = n - active;
    return out;
  }
  if (loss.kind == LossKind::huber && penalty.kind == PenaltyKind::l1) {
    out.df_hat = active;
    out.trace_dpsi = double(fit.inlier_set.size()) - active;
    return out;
  }
  throw NoClosedForm("no closed form for loss '" + std::string(to_string(loss.kind)) +
                     "' with penalty '" + std::string(to_string(penalty.kind)) + "'");
}

DivergenceEstimate mc_divergence(const VectorField& field, const Vector& y, double a, int m,
                                 RngStream& rng) {
  if (!(a > 0.0)) throw ValidationError("mc_divergence: a must be > 0");
  if (m < 1) throw ValidationError("mc_divergence: m must be >= 1");
  const Vector base = field(y);
  std::normal_distribution<double> normal(0.0, 1.0);
  double sum = 0.0;
  double sum_sq = 0.0;
  Vector z(y.size());
  for (int k = 0; k < m; ++k) {
    for (Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    const Vector moved = field(y + a * z);
    const double term = z.dot(moved - base) / a;
    sum += term;
    sum_sq += term * term;
  }
  DivergenceEstimate out;
  out.estimate = sum / m;
  if (m > 1) {
    const double var = std::max(0.0, (sum_sq - m * out.estimate * out.estimate) / (m - 1));
    out.std_err = std::sqrt(var / m);
  } else {
    out.std_err = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

JacobianFactors mc_factors(const LossSpec& loss, const PenaltySpec& penalty, const Dataset& data,
                           const SolverConfig& cfg, double a, int m, RngStream& rng) {
  SolverConfig tight = cfg;
  tight.kkt_tol = std::min(cfg.kkt_tol, kPerturbedKktTol);
  const FitResult base = fit(loss, penalty, data, tight);
  require_converged(base);
  return mc_factors(base, loss, penalty, data, cfg, a, m, rng);
}

JacobianFactors mc_factors(const FitResult& base, const LossSpec& loss, const PenaltySpec& penalty,
                           const Dataset& data, const SolverConfig& cfg, double a, int m,
                           RngStream& rng) {
  if (!(a > 0.0)) throw ValidationError("mc_factors: a must be > 0");
  if (m < 1) throw ValidationError("mc_factors: m must be >= 1");
  SolverConfig tight = cfg;
  tight.kkt_tol = std::min(cfg.kkt_tol, kPerturbedKktTol);
  tight.record_objective = false;

  const Vector fitted = data.X * base.beta_hat;
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset moved{data.X, data.y};
  Vector z(data.n());
  double df_sum = 0.0, df_sq = 0.0, tr_sum = 0.0, tr_sq = 0.0;
  for (int k = 0; k < m; ++k) {
    for (Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    moved.y = data.y + a * z;
    const FitResult probe = fit(loss, penalty, moved, tight, base.beta_hat);
    if (!probe.converged) {
      throw FieldEvaluationFailure("perturbed fit " + std::to_string(k) +
                                   " did not converge (gap " + format_double(probe.kkt_gap) + ")");
    }
    const double df_term = z.dot(data.X * probe.beta_hat - fitted) / a;
    const double tr_term = z.dot(probe.psi_hat - base.psi_hat) / a;
    df_sum += df_term;
    df_sq += df_term * df_term;
    tr_sum += tr_term;
    tr_sq += tr_term * tr_term;
  }
  auto std_err = [m](double sum, double sq) -> double {
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mean = sum / m;
    return std::sqrt(std::max(0.0, (sq - m * mean * mean) / (m - 1)) / m);
  };
  JacobianFactors out;
  out.method = FactorMethod::monte_carlo;
  out.mc_a = a;
  out.mc_m = m;
  out.df_hat = df_sum / m;
  out.trace_dpsi = tr_sum / m;
  out.df_std_err = std_err(df_sum, df_sq);
  out.trace_std_err = std_err(tr_sum, tr_sq);
  return out;
}

Matrix fd_jacobian(const VectorField& field, const Vector& y, double h) {
  if (!(h > 0.0)) throw ValidationError("fd_jacobian: h must be > 0");
  const Index n = y.size();
  Matrix jac(n, n);
  Vector probe = y;
  for (Index l = 0; l < n; ++l) {
    probe[l] = y[l] + h;
    const Vector up = field(probe);
    probe[l] = y[l] - h;
    const Vector down = field(probe);
    probe[l] = y[l];
    if (up.size() != n || down.size() != n) {
      throw FieldEvaluationFailure("fd_jacobian: field must map R^n to R^n");
    }
    jac.col(l) = (up - down) / (2.0 * h);
  }
  return jac;
}

double default_fd_step(const Vector& y) {
  return 1e-5 * (1.0 + (y.size() > 0 ? y.cwiseAbs().maxCoeff() : 0.0));
}

namespace {

VectorField make_field(const LossSpec& loss, const PenaltySpec& penalty, const Matrix& X,
                       const SolverConfig& cfg, std::optional<Vector> warm_start,
                       bool fitted_values) {
  auto design = std::make_shared<const Matrix>(X);
  return [loss, penalty, design, cfg, warm = std::move(warm_start), fitted_values](
             const Vector& y) -> Vector {
    const Dataset data{*design, y};
    const FitResult result = fit(loss, penalty, data, cfg, warm);
    if (!result.converged) {
      throw FieldEvaluationFailure("fit did not converge (gap " + format_double(result.kkt_gap) +
                                   ")");
    }
    return fitted_values ? Vector(*design * result.beta_hat) : result.psi_hat;
  };
}

}  // namespace

VectorField fitted_values_field(const LossSpec& loss, const PenaltySpec& penalty, const Matrix& X,
                                const SolverConfig& cfg, std::optional<Vector> warm_start) {
  return make_field(loss, penalty, X, cfg, std::move(warm_start), true);
}

VectorField psi_field(const LossSpec& loss, const PenaltySpec& penalty, const Matrix& X,
                      const SolverConfig& cfg, std::optional<Vector> warm_start) {
  return make_field(loss, penalty, X, cfg, std::move(warm_start), false);
}

}  // namespace hdrisk
