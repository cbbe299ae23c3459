#include "hdrisk/estimators.hpp"

#include <cmath>

#include "hdrisk/errors.hpp"

namespace hdrisk {

namespace {

constexpr double kSquareLossMargin = 1e-6;

struct Ingredients {
  double psi_sq;      // ||psi_hat||^2
  double whitened;    // ||Sigma^{-1/2} X' psi_hat||^2
  double p;
  double n;
};

Ingredients ingredients(const FitResult& fit, const Dataset& data, const Covariance& sigma_cov) {
  if (fit.psi_hat.size() != data.n() || fit.beta_hat.size() != data.p()) {
    throw DimensionMismatch("estimator: fit does not match the dataset");
  }
  if (sigma_cov.dim() != data.p()) {
    throw DimensionMismatch("estimator: covariance dimension does not match p");
  }
  const Vector score = data.X.transpose() * fit.psi_hat;
  return {fit.psi_hat.squaredNorm(), sigma_cov.inv_sqrt_apply(score).squaredNorm(),
          double(data.p()), double(data.n())};
}

}  // namespace

RiskReport hat_r(const FitResult& fit, const Dataset& data, const Covariance& sigma_cov,
                 const JacobianFactors& factors, double threshold) {
  const Ingredients in = ingredients(fit, data, sigma_cov);
  const double tr = factors.trace_dpsi;
  if (tr == 0.0) {
    throw DegenerateFactor("tr[d psi_hat/dy] = 0: every observation is an outlier");
  }
  RiskReport out;
  out.factors = factors;
  out.factor = tr / in.n;
  out.degenerate = out.factor * out.factor < threshold;
  out.r_hat = (in.psi_sq * (2.0 * factors.df_hat - in.p) + in.whitened) / (tr * tr);
  return out;
}

RiskReport hat_r(const FitResult& fit, const Dataset& data, const Matrix& sigma_cov,
                 const JacobianFactors& factors, double threshold) {
  return hat_r(fit, data, Covariance(sigma_cov), factors, threshold);
}

RiskReport square_loss_estimates(const FitResult& fit, const Dataset& data,
                                 const Covariance& sigma_cov, const JacobianFactors& factors,
                                 double threshold) {
  const Ingredients in = ingredients(fit, data, sigma_cov);
  const double df = factors.df_hat;
  const double gap = in.n - df;
  if (gap <= std::sqrt(in.n) * kSquareLossMargin) {
    throw DegenerateFactor("n - df_hat is numerically zero; the square-loss estimates are undefined");
  }
  const double denom = gap * gap;
  RiskReport out;
  out.factors = factors;
  out.factor = gap / in.n;
  out.degenerate = out.factor * out.factor < threshold;
  out.tau2_hat = in.psi_sq * in.n / denom;
  out.r_hat = (in.psi_sq * (2.0 * df - in.p) + in.whitened) / denom;
  out.sigma2_hat = (in.psi_sq * (in.n - (2.0 * df - in.p)) - in.whitened) / denom;
  return out;
}

RiskReport square_loss_estimates(const FitResult& fit, const Dataset& data,
                                 const Matrix& sigma_cov, const JacobianFactors& factors,
                                 double threshold) {
  return square_loss_estimates(fit, data, Covariance(sigma_cov), factors, threshold);
}

double tau2_hat(const FitResult& fit, double df_hat) {
  const double n = double(fit.psi_hat.size());
  const double gap = n - df_hat;
  if (gap <= std::sqrt(n) * kSquareLossMargin) {
    throw DegenerateFactor("n - df_hat is numerically zero");
  }
  return fit.psi_hat.squaredNorm() * n / (gap * gap);
}

double sure(const FitResult& fit, double df_hat, double sigma2) {
  if (!(sigma2 >= 0.0)) throw ValidationError("sure: sigma2 must be >= 0");
  const double n = double(fit.residual.size());
  return fit.residual.squaredNorm() + 2.0 * sigma2 * df_hat - sigma2 * n;
}

Vector sigma_inv_sqrt_apply(const Matrix& sigma_cov, const Vector& v) {
  return Covariance(sigma_cov).inv_sqrt_apply(v);
}

Vector sigma_inv_sqrt_apply(const Covariance& sigma_cov, const Vector& v) {
  return sigma_cov.inv_sqrt_apply(v);
}

}  // namespace hdrisk
