#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <utility>
#include <variant>

#include "hdrisk/random.hpp"

namespace hdrisk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Observed regression data: response y and design X (n rows, p columns).
struct Dataset {
  Matrix X;
  Vector y;

  [[nodiscard]] Index n() const { return X.rows(); }
  [[nodiscard]] Index p() const { return X.cols(); }

  /// Throws DimensionMismatch / ValidationError on shape or finiteness violations.
  void validate() const;
};

/// Symmetric positive-definite covariance with cached square roots.
///
/// The eigendecomposition is computed once at construction; the object is
/// immutable afterwards and can be shared across threads.
class Covariance {
 public:
  /// Throws NonPositiveDefinite if the matrix is not symmetric, or any
  /// eigenvalue is below 1e-12 times the largest one.
  explicit Covariance(Matrix sigma);
  static Covariance identity(Index p);

  [[nodiscard]] const Matrix& matrix() const { return sigma_; }
  [[nodiscard]] Index dim() const { return sigma_.rows(); }
  [[nodiscard]] bool is_identity() const { return identity_; }

  /// Sigma^{1/2} (symmetric root).
  [[nodiscard]] const Matrix& sqrt() const;
  [[nodiscard]] Vector inv_sqrt_apply(const Vector& v) const;
  /// v' Sigma v
  [[nodiscard]] double quadratic_form(const Vector& v) const;

 private:
  struct Identity {};
  Covariance(Identity, Index p);

  Matrix sigma_;
  Matrix eigvecs_;
  Vector eigvals_;
  Matrix sqrt_;
  bool identity_ = false;
};

struct GroundTruth {
  Vector beta;
  std::shared_ptr<const Covariance> sigma_cov;
  Vector eps;
  double sigma2_star = 0.0;  ///< ||eps||^2 / n
};

struct GaussianNoise {
  double sigma = 1.0;
};
struct StudentTNoise {
  int dof = 2;
};
/// (1-q) N(0, sigma^2) + q N(0, (outlier_scale sigma)^2).
struct ContaminatedNoise {
  double sigma = 1.0;
  double q = 0.1;
  double outlier_scale = 10.0;
};
using NoiseSpec = std::variant<GaussianNoise, StudentTNoise, ContaminatedNoise>;

struct IdentityCovariance {};
/// W / (dof_multiplier * p), W ~ Wishart(I_p, dof_multiplier * p).
struct ScaledWishart {
  int dof_multiplier = 5;
};
using CovarianceSpec = std::variant<IdentityCovariance, ScaledWishart>;

/// s coefficients equal to amplitude, the rest zero.
struct SparseFlatSignal {
  Index s = 0;
  double amplitude = 1.0;
};
/// mat(beta) is rows x cols (column-major vec) with iid N(0,1) entries in
/// the first `rank` columns.
struct LowRankSignal {
  Index rows = 0;
  Index cols = 0;
  Index rank = 0;
};
using SignalSpec = std::variant<SparseFlatSignal, LowRankSignal>;

void validate(const NoiseSpec& noise);
void validate(const SignalSpec& signal, Index p);

Matrix gen_covariance(const CovarianceSpec& spec, Index p, RngStream& rng);
Vector gen_signal(const SignalSpec& spec, Index p, RngStream& rng);
Vector gen_noise(const NoiseSpec& spec, Index n, RngStream& rng);

std::pair<Dataset, GroundTruth> gen_dataset(Index n, std::shared_ptr<const Covariance> sigma_cov,
                                            const Vector& beta, const NoiseSpec& noise,
                                            RngStream& rng);
std::pair<Dataset, GroundTruth> gen_dataset(Index n, const Matrix& sigma_cov, const Vector& beta,
                                            const NoiseSpec& noise, RngStream& rng);

/// ||Sigma^{1/2} (beta_hat - beta)||^2
double oos_error(const Vector& beta_hat, const GroundTruth& truth);

}  // namespace hdrisk
