#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hdrisk/errors.hpp"
#include "hdrisk/losses.hpp"
#include "hdrisk/model_data.hpp"

namespace hdrisk {

enum class PenaltyKind { none, l1, elastic_net, nuclear };

/// Convex penalty g.
///
///   none        : g = 0
///   l1          : g(b) = lambda ||b||_1
///   elastic_net : g(b) = mu ||b||^2 / 2 + lambda ||b||_1
///   nuclear     : g(b) = lambda ||mat(b)||_nuc, mat(b) is rows x cols column-major
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::none;
  double lambda = 0.0;
  double mu = 0.0;
  Index rows = 0;
  Index cols = 0;

  static PenaltySpec none() { return {}; }
  static PenaltySpec l1(double lambda) { return {PenaltyKind::l1, lambda, 0.0, 0, 0}; }
  static PenaltySpec elastic_net(double lambda, double mu) {
    return {PenaltyKind::elastic_net, lambda, mu, 0, 0};
  }
  static PenaltySpec nuclear(double lambda, Index rows, Index cols) {
    return {PenaltyKind::nuclear, lambda, 0.0, rows, cols};
  }

  /// Throws ValidationError; `p` is the coefficient dimension.
  void validate(Index p) const;
  [[nodiscard]] double value(const Vector& b) const;
};

std::string_view to_string(PenaltyKind kind);
PenaltyKind penalty_kind_from_string(std::string_view name);

enum class Algorithm { automatic, coordinate_descent, fista, augmented_lasso };

std::string_view to_string(Algorithm algorithm);
Algorithm algorithm_from_string(std::string_view name);

struct SolverConfig {
  int max_iters = 50'000;
  double kkt_tol = 1e-8;
  /// Relative: a coefficient is active when |b_j| > support_tol * (1 + ||b||_inf).
  double support_tol = 1e-9;
  Algorithm algorithm = Algorithm::automatic;
  /// Record the objective after every iteration in FitResult::objective_trace.
  bool record_objective = false;

  void validate() const;
};

struct FitResult {
  Vector beta_hat;
  Vector residual;       ///< y - X beta_hat
  Vector psi_hat;        ///< psi(y - X beta_hat)
  Vector psi_prime_hat;  ///< psi'(y - X beta_hat)
  std::vector<Index> active_set;
  std::vector<Index> inlier_set;
  double kkt_gap = 0.0;
  int iterations = 0;
  bool converged = false;
  Algorithm algorithm = Algorithm::automatic;
  std::vector<double> objective_trace;
};

/// Raised by require_converged(); carries the last iterate and its gap.
class NotConverged : public Error {
 public:
  explicit NotConverged(FitResult last);
  [[nodiscard]] const FitResult& last() const { return last_; }

 private:
  FitResult last_;
};

/// Penalized M-estimator  argmin_b (1/n) sum_i rho(y_i - x_i'b) + g(b).
///
/// Dispatch under Algorithm::automatic: square + l1 uses cyclic coordinate
/// descent, huber + l1 the augmented Lasso, everything else accelerated
/// proximal gradient with adaptive restart. A non-converged fit is returned
/// with converged = false; use require_converged() to turn it into an error.
FitResult fit(const LossSpec& loss, const PenaltySpec& penalty, const Dataset& data,
              const SolverConfig& cfg = {}, const std::optional<Vector>& warm_start = std::nullopt);

const FitResult& require_converged(const FitResult& result);

/// Objective value (1/n) sum rho(y - Xb) + g(b).
double objective(const LossSpec& loss, const PenaltySpec& penalty, const Dataset& data,
                 const Vector& b);

/// argmin_z ||z - v||^2 / (2 step) + g(z).
Vector prox_penalty(const PenaltySpec& penalty, const Vector& v, double step);

/// Huber Lasso as a Lasso in R^{p+n}:
///   min ||X b + c theta - y||^2 / (2n) + lambda ||b||_1 + lambda ||theta||_1,
/// c = sqrt(n) lambda / lambda_star. Equivalent to fit(huber(sqrt(n) lambda_star), l1(lambda)).
struct AugmentedLasso {
  Dataset data;  ///< design [X | c I], response y
  double lambda = 0.0;
  double lambda_star = 0.0;
  double theta_scale = 0.0;  ///< c
  Index p = 0;

  struct BackMapped {
    Vector beta;
    Vector theta;
    std::vector<Index> inlier_set;  ///< {i : theta_i == 0}
  };
  [[nodiscard]] BackMapped back_map(const Vector& b_aug) const;
  /// psi_hat = y - X beta - c theta
  [[nodiscard]] Vector psi_hat(const Vector& b_aug) const;
};

AugmentedLasso augment_huber(const Dataset& data, double lambda, double lambda_star);

/// Huber scale matching augment_huber: sqrt(n) * lambda_star.
inline double huber_scale_from_lambda_star(Index n, double lambda_star) {
  return std::sqrt(static_cast<double>(n)) * lambda_star;
}

/// Violation of X' psi_hat / n in dg(beta_hat), sup-norm.
double kkt_gap(const FitResult& result, const LossSpec& loss, const PenaltySpec& penalty,
               const Dataset& data);
double kkt_gap(const Vector& beta_hat, const LossSpec& loss, const PenaltySpec& penalty,
               const Dataset& data, double support_tol = 1e-9);

/// Spectral norm of X by power iteration.
double operator_norm(const Matrix& X, int iterations = 50, double tol = 1e-10);

}  // namespace hdrisk
