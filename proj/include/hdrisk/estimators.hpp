#pragma once

#include <optional>

#include "hdrisk/jacobians.hpp"
#include "hdrisk/model_data.hpp"
#include "hdrisk/solvers.hpp"

namespace hdrisk {

/// Default cutoff on (tr[d psi_hat/dy] / n)^2 below which a report is flagged.
inline constexpr double kDegeneracyThreshold = 1e-2;

struct RiskReport {
  double r_hat = 0.0;  ///< out-of-sample error estimate
  std::optional<double> tau2_hat;
  std::optional<double> sigma2_hat;
  std::optional<double> sure;
  double factor = 0.0;  ///< tr[d psi_hat/dy] / n
  bool degenerate = false;
  JacobianFactors factors;
};

/// R_hat = tr^{-2} { ||psi_hat||^2 (2 df_hat - p) + ||Sigma^{-1/2} X' psi_hat||^2 }.
///
/// A report whose squared factor is below `threshold` is still returned but
/// flagged degenerate; a factor of exactly zero throws DegenerateFactor.
RiskReport hat_r(const FitResult& fit, const Dataset& data, const Covariance& sigma_cov,
                 const JacobianFactors& factors, double threshold = kDegeneracyThreshold);
RiskReport hat_r(const FitResult& fit, const Dataset& data, const Matrix& sigma_cov,
                 const JacobianFactors& factors, double threshold = kDegeneracyThreshold);

/// Square-loss triple: generalization error tau2_hat, out-of-sample error
/// r_hat and noise level sigma2_hat, all with denominator (n - df_hat)^2.
/// Throws DegenerateFactor when n - df_hat <= sqrt(n) * 1e-6.
RiskReport square_loss_estimates(const FitResult& fit, const Dataset& data,
                                 const Covariance& sigma_cov, const JacobianFactors& factors,
                                 double threshold = kDegeneracyThreshold);
RiskReport square_loss_estimates(const FitResult& fit, const Dataset& data,
                                 const Matrix& sigma_cov, const JacobianFactors& factors,
                                 double threshold = kDegeneracyThreshold);

/// Sigma-free generalization error estimate n ||psi_hat||^2 / (n - df_hat)^2.
double tau2_hat(const FitResult& fit, double df_hat);

/// ||y - X beta_hat||^2 + 2 sigma2 df_hat - sigma2 n.
double sure(const FitResult& fit, double df_hat, double sigma2);

Vector sigma_inv_sqrt_apply(const Matrix& sigma_cov, const Vector& v);
Vector sigma_inv_sqrt_apply(const Covariance& sigma_cov, const Vector& v);

}  // namespace hdrisk
