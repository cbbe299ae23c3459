#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hdrisk/jacobians.hpp"
#include "hdrisk/model_data.hpp"
#include "hdrisk/solvers.hpp"

namespace hdrisk {

enum class ExperimentKind { huber_grid, nuclear_norm, ols_calibration, sigma_recovery };

std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

struct JacobianChoice {
  FactorMethod method = FactorMethod::closed_form;
  double a = kDefaultMcScale;
  int m = kDefaultMcProbes;
};

/// One simulation study.
///
/// huber_grid      : huber loss with scale sqrt(n) lambda_star, l1(lambda); grid lambda x lambda_star
/// nuclear_norm    : square loss, nuclear(lambda) on the rows x cols of a low_rank signal
/// ols_calibration : square loss, no penalty (grids ignored)
/// sigma_recovery  : square loss, elastic_net(lambda, mu)
///
/// Sigma and beta are drawn once per run; each replication r draws (X, eps)
/// from RNG stream (master_seed, r).
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::huber_grid;
  Index n = 0;
  Index p = 0;
  int reps = 1;
  std::uint64_t master_seed = 0;
  std::vector<double> lambdas;
  std::vector<double> lambda_stars;
  double mu = 0.0;
  NoiseSpec noise = GaussianNoise{};
  CovarianceSpec covariance = IdentityCovariance{};
  SignalSpec signal = SparseFlatSignal{};
  JacobianChoice jacobian;
  int threads = 1;
  SolverConfig solver;
  bool record_timing = true;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Desk-scale defaults for each experiment.
ExperimentConfig default_config(ExperimentKind kind);
/// Full-size settings of the published simulation studies (slow).
ExperimentConfig paper_scale_config(ExperimentKind kind);

/// Parses a JSON document; missing fields take default_config(experiment).
/// Throws ValidationError (with the field name) on malformed input.
ExperimentConfig config_from_json(const nlohmann::json& doc, bool paper_scale = false);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Geometric grid base * ratio^k for k in [k_min, k_max], optionally divided by sqrt(n).
std::vector<double> geometric_grid(double base, double ratio, int k_min, int k_max,
                                   std::optional<Index> per_sqrt_n = std::nullopt);

struct ResultRow {
  int rep = 0;
  int grid_index = 0;
  double lambda = 0.0;
  std::optional<double> lambda_star;
  double oos_error = 0.0;
  double r_hat = 0.0;
  std::optional<double> tau2_hat;
  std::optional<double> sigma2_hat;
  double sigma2_star = 0.0;
  double df_hat = 0.0;
  double trace_dpsi = 0.0;
  Index n_active = 0;
  Index n_inliers = 0;
  double kkt_gap = 0.0;
  bool degenerate = false;
  double wall_ms = 0.0;
  std::string reason;  ///< empty unless the grid point failed or was flagged
};

inline constexpr const char* kResultCsvHeader =
    "rep,lambda,lambda_star,oos_error,r_hat,tau2_hat,sigma2_hat,sigma2_star,df_hat,trace_dpsi,"
    "n_active,n_inliers,kkt_gap,degenerate,wall_ms";

/// reps x |grid| rows, sorted by (rep, grid index). The row set does not
/// depend on cfg.threads. Per-point failures become degenerate rows.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// Number of grid points per replication.
std::size_t grid_size(const ExperimentConfig& cfg);

/// Header line plus one line per row, LF line endings.
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);

}  // namespace hdrisk
