#include "hdrisk/model_data.hpp"

#include <cmath>
#include <random>
#include <string>

#include "hdrisk/errors.hpp"

namespace hdrisk {

namespace {

constexpr double kEigenCutoff = 1e-12;

Matrix standard_normal(Index rows, Index cols, RngStream& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      g(i, j) = normal(rng);
    }
  }
  return g;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

void Dataset::validate() const {
  if (y.size() != X.rows()) {
    throw DimensionMismatch("dataset: y has length " + std::to_string(y.size()) + " but X has " +
                            std::to_string(X.rows()) + " rows");
  }
  if (X.rows() == 0 || X.cols() == 0) {
    throw ValidationError("dataset: n and p must be positive");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw ValidationError("dataset: non-finite entries");
  }
}

Covariance::Covariance(Identity, Index p)
    : sigma_(Matrix::Identity(p, p)),
      eigvecs_(Matrix::Identity(p, p)),
      eigvals_(Vector::Ones(p)),
      sqrt_(Matrix::Identity(p, p)),
      identity_(true) {}

Covariance Covariance::identity(Index p) { return Covariance(Identity{}, p); }

Covariance::Covariance(Matrix sigma) : sigma_(std::move(sigma)) {
  if (sigma_.rows() != sigma_.cols() || sigma_.rows() == 0) {
    throw NonPositiveDefinite("covariance must be a non-empty square matrix");
  }
  if (!sigma_.allFinite()) {
    throw NonPositiveDefinite("covariance has non-finite entries");
  }
  const double scale = sigma_.cwiseAbs().maxCoeff();
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw NonPositiveDefinite("covariance is not symmetric");
  }
  if (sigma_.isIdentity(0.0)) {
    *this = identity(sigma_.rows());
    return;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_);
  if (eig.info() != Eigen::Success) {
    throw NonPositiveDefinite("eigendecomposition of covariance failed");
  }
  eigvals_ = eig.eigenvalues();
  eigvecs_ = eig.eigenvectors();
  const double top = eigvals_.maxCoeff();
  if (!(top > 0.0) || eigvals_.minCoeff() < kEigenCutoff * top) {
    throw NonPositiveDefinite("covariance has eigenvalue " + std::to_string(eigvals_.minCoeff()) +
                              " below the positive-definiteness cutoff");
  }
  sqrt_ = eigvecs_ * eigvals_.cwiseSqrt().asDiagonal() * eigvecs_.transpose();
  sqrt_ = 0.5 * (sqrt_ + sqrt_.transpose()).eval();
}

const Matrix& Covariance::sqrt() const { return sqrt_; }

Vector Covariance::inv_sqrt_apply(const Vector& v) const {
  if (v.size() != dim()) {
    throw DimensionMismatch("inv_sqrt_apply: vector length does not match covariance");
  }
  if (identity_) {
    return v;
  }
  Vector coords = eigvecs_.transpose() * v;
  coords.array() /= eigvals_.array().sqrt();
  return eigvecs_ * coords;
}

double Covariance::quadratic_form(const Vector& v) const {
  if (v.size() != dim()) {
    throw DimensionMismatch("quadratic_form: vector length does not match covariance");
  }
  if (identity_) {
    return v.squaredNorm();
  }
  return v.dot(sigma_ * v);
}

void validate(const NoiseSpec& noise) {
  std::visit(Overloaded{
                 [](const GaussianNoise& g) {
                   if (!(g.sigma > 0.0)) throw ValidationError("noise.sigma must be > 0");
                 },
                 [](const StudentTNoise& t) {
                   if (t.dof < 1) throw ValidationError("noise.dof must be a positive integer");
                 },
                 [](const ContaminatedNoise& c) {
                   if (!(c.sigma > 0.0)) throw ValidationError("noise.sigma must be > 0");
                   if (!(c.q >= 0.0 && c.q <= 1.0)) throw ValidationError("noise.q must lie in [0,1]");
                   if (!(c.outlier_scale > 0.0))
                     throw ValidationError("noise.outlier_scale must be > 0");
                 },
             },
             noise);
}

void validate(const SignalSpec& signal, Index p) {
  std::visit(Overloaded{
                 [p](const SparseFlatSignal& s) {
                   if (s.s < 0 || s.s > p) throw ValidationError("signal.s must lie in [0, p]");
                 },
                 [p](const LowRankSignal& s) {
                   if (s.rows * s.cols != p)
                     throw ValidationError("signal.rows * signal.cols must equal p");
                   if (s.rank < 0 || s.rank > std::min(s.rows, s.cols))
                     throw ValidationError("signal.rank must not exceed min(rows, cols)");
                 },
             },
             signal);
}

Matrix gen_covariance(const CovarianceSpec& spec, Index p, RngStream& rng) {
  if (p < 1) {
    throw ValidationError("gen_covariance: p must be >= 1");
  }
  return std::visit(Overloaded{
                        [p](const IdentityCovariance&) -> Matrix { return Matrix::Identity(p, p); },
                        [p, &rng](const ScaledWishart& w) -> Matrix {
                          if (w.dof_multiplier < 1)
                            throw ValidationError("covariance.dof_multiplier must be >= 1");
                          const Index dof = static_cast<Index>(w.dof_multiplier) * p;
                          const Matrix g = standard_normal(dof, p, rng);
                          Matrix sigma = Matrix::Zero(p, p);
                          sigma.selfadjointView<Eigen::Lower>().rankUpdate(g.transpose(),
                                                                           1.0 / double(dof));
                          sigma.triangularView<Eigen::StrictlyUpper>() =
                              sigma.transpose().triangularView<Eigen::StrictlyUpper>();
                          return sigma;
                        },
                    },
                    spec);
}

Vector gen_signal(const SignalSpec& spec, Index p, RngStream& rng) {
  validate(spec, p);
  return std::visit(Overloaded{
                        [p](const SparseFlatSignal& s) -> Vector {
                          Vector beta = Vector::Zero(p);
                          beta.head(s.s).setConstant(s.amplitude);
                          return beta;
                        },
                        [p, &rng](const LowRankSignal& s) -> Vector {
                          Vector beta = Vector::Zero(p);
                          std::normal_distribution<double> normal(0.0, 1.0);
                          // column-major: the first `rank` columns are contiguous
                          for (Index k = 0; k < s.rows * s.rank; ++k) {
                            beta[k] = normal(rng);
                          }
                          return beta;
                        },
                    },
                    spec);
}

Vector gen_noise(const NoiseSpec& spec, Index n, RngStream& rng) {
  validate(spec);
  Vector eps(n);
  std::visit(Overloaded{
                 [&](const GaussianNoise& g) {
                   std::normal_distribution<double> normal(0.0, g.sigma);
                   for (Index i = 0; i < n; ++i) eps[i] = normal(rng);
                 },
                 [&](const StudentTNoise& t) {
                   std::student_t_distribution<double> student(t.dof);
                   for (Index i = 0; i < n; ++i) eps[i] = student(rng);
                 },
                 [&](const ContaminatedNoise& c) {
                   std::uniform_real_distribution<double> unif(0.0, 1.0);
                   std::normal_distribution<double> normal(0.0, 1.0);
                   for (Index i = 0; i < n; ++i) {
                     const bool outlier = unif(rng) < c.q;
                     const double z = normal(rng);
                     eps[i] = (outlier ? c.outlier_scale * c.sigma : c.sigma) * z;
                   }
                 },
             },
             spec);
  return eps;
}

std::pair<Dataset, GroundTruth> gen_dataset(Index n, std::shared_ptr<const Covariance> sigma_cov,
                                            const Vector& beta, const NoiseSpec& noise,
                                            RngStream& rng) {
  if (n < 1) {
    throw ValidationError("gen_dataset: n must be >= 1");
  }
  if (!sigma_cov || sigma_cov->dim() != beta.size()) {
    throw DimensionMismatch("gen_dataset: beta length does not match covariance dimension");
  }
  RngStream design_rng = rng.substream(1);
  RngStream noise_rng = rng.substream(2);

  Dataset data;
  data.X = standard_normal(n, beta.size(), design_rng);
  if (!sigma_cov->is_identity()) {
    data.X = data.X * sigma_cov->sqrt();
  }
  GroundTruth truth;
  truth.beta = beta;
  truth.eps = gen_noise(noise, n, noise_rng);
  truth.sigma2_star = truth.eps.squaredNorm() / double(n);
  truth.sigma_cov = std::move(sigma_cov);
  data.y = data.X * beta + truth.eps;
  return {std::move(data), std::move(truth)};
}

std::pair<Dataset, GroundTruth> gen_dataset(Index n, const Matrix& sigma_cov, const Vector& beta,
                                            const NoiseSpec& noise, RngStream& rng) {
  return gen_dataset(n, std::make_shared<const Covariance>(sigma_cov), beta, noise, rng);
}

double oos_error(const Vector& beta_hat, const GroundTruth& truth) {
  if (beta_hat.size() != truth.beta.size()) {
    throw DimensionMismatch("oos_error: beta_hat and beta lengths differ");
  }
  return truth.sigma_cov->quadratic_form(beta_hat - truth.beta);
}

}  // namespace hdrisk
