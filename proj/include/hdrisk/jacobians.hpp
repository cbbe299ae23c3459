#pragma once

#include <functional>
#include <optional>

#include "hdrisk/losses.hpp"
#include "hdrisk/model_data.hpp"
#include "hdrisk/random.hpp"
#include "hdrisk/solvers.hpp"

namespace hdrisk {

/// A vector field R^n -> R^n, e.g. y -> X beta_hat(y) or y -> psi_hat(y).
using VectorField = std::function<Vector(const Vector&)>;

enum class FactorMethod { closed_form, monte_carlo };

/// df_hat = tr[d(X beta_hat)/dy] and tr[d psi_hat/dy].
struct JacobianFactors {
  double df_hat = 0.0;
  double trace_dpsi = 0.0;
  FactorMethod method = FactorMethod::closed_form;
  double mc_a = 0.0;  ///< perturbation scale (Monte Carlo only)
  int mc_m = 0;       ///< number of probes (Monte Carlo only)
  std::optional<double> df_std_err;
  std::optional<double> trace_std_err;
};

/// Closed-form factors for
///   square + none (p < n), square + l1, huber + l1, any loss + elastic_net.
/// Throws NoClosedForm otherwise.
JacobianFactors closed_form_factors(const FitResult& fit, const LossSpec& loss,
                                    const PenaltySpec& penalty, const Dataset& data);

struct DivergenceEstimate {
  double estimate = 0.0;
  double std_err = 0.0;  ///< sample standard error of the m terms; NaN when m == 1
};

/// (1/m) sum_k a^{-1} z_k' [F(y + a z_k) - F(y)],  z_k iid N(0, I_n).
DivergenceEstimate mc_divergence(const VectorField& field, const Vector& y, double a, int m,
                                 RngStream& rng);

/// Default probe parameters.
inline constexpr double kDefaultMcScale = 0.01;
inline constexpr int kDefaultMcProbes = 100;

/// Monte Carlo factors. Perturbed fits are warm-started from the base fit and
/// run with the KKT tolerance tightened to 1e-10. Both divergences share the
/// same probes. Throws FieldEvaluationFailure when a perturbed fit fails.
JacobianFactors mc_factors(const LossSpec& loss, const PenaltySpec& penalty, const Dataset& data,
                           const SolverConfig& cfg, double a, int m, RngStream& rng);
JacobianFactors mc_factors(const FitResult& base, const LossSpec& loss, const PenaltySpec& penalty,
                           const Dataset& data, const SolverConfig& cfg, double a, int m,
                           RngStream& rng);

/// Central differences: column l is [F(y + h e_l) - F(y - h e_l)] / (2h).
Matrix fd_jacobian(const VectorField& field, const Vector& y, double h);

/// Default finite-difference step 1e-5 (1 + ||y||_inf).
double default_fd_step(const Vector& y);

/// Fields y -> X beta_hat(y) and y -> psi_hat(y) at fixed X.
VectorField fitted_values_field(const LossSpec& loss, const PenaltySpec& penalty, const Matrix& X,
                                const SolverConfig& cfg,
                                std::optional<Vector> warm_start = std::nullopt);
VectorField psi_field(const LossSpec& loss, const PenaltySpec& penalty, const Matrix& X,
                      const SolverConfig& cfg, std::optional<Vector> warm_start = std::nullopt);

}  // namespace hdrisk
