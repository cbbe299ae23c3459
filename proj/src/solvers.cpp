#include "hdrisk/solvers.hpp"

#include "hdrisk/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hdrisk {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double support_threshold(const Vector& b, double support_tol) {
  const double sup = b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0;
  return support_tol * (1.0 + sup);
}

Eigen::Map<const Matrix> as_matrix(const Vector& v, Index rows, Index cols) {
  return {v.data(), rows, cols};
}

/// Sup-norm violation of  grad_j - mu b_j  in  lambda * d|b_j|.
/// `grad` is X' psi / n (or A' r / n for the Lasso).
double separable_gap(const Vector& grad, const Vector& b, double lambda, double mu,
                     const std::vector<char>& active) {
  double gap = 0.0;
  for (Index j = 0; j < b.size(); ++j) {
    const double g = grad[j] - mu * b[j];
    double v;
    if (active[static_cast<std::size_t>(j)] != 0) {
      v = std::abs(g - lambda * sign_of(b[j]));
    } else {
      v = std::max(0.0, std::abs(g) - lambda);
    }
    gap = std::max(gap, v);
  }
  return gap;
}

std::vector<char> active_mask(const Vector& b, double threshold) {
  std::vector<char> mask(static_cast<std::size_t>(b.size()), 0);
  for (Index j = 0; j < b.size(); ++j) {
    mask[static_cast<std::size_t>(j)] = std::abs(b[j]) > threshold ? 1 : 0;
  }
  return mask;
}

double nuclear_gap(const Vector& grad, const Vector& b, const PenaltySpec& penalty,
                   double support_tol) {
  const Matrix g = as_matrix(grad, penalty.rows, penalty.cols);
  const Matrix bm = as_matrix(b, penalty.rows, penalty.cols);
  Eigen::JacobiSVD<Matrix> svd(bm, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double cutoff = support_tol * (1.0 + (sv.size() > 0 ? sv[0] : 0.0));
  Index rank = 0;
  while (rank < sv.size() && sv[rank] > cutoff) ++rank;

  const Matrix& u = svd.matrixU();
  const Matrix& v = svd.matrixV();
  const Matrix rotated = u.transpose() * g * v;  // rows x cols in singular bases
  double gap = 0.0;
  for (Index i = 0; i < rank; ++i) {
    for (Index j = 0; j < rotated.cols(); ++j) {
      const double target = (i == j) ? penalty.lambda : 0.0;
      gap = std::max(gap, std::abs(rotated(i, j) - target));
    }
  }
  for (Index j = 0; j < rank; ++j) {
    for (Index i = rank; i < rotated.rows(); ++i) {
      gap = std::max(gap, std::abs(rotated(i, j)));
    }
  }
  const Matrix rest = rotated.bottomRightCorner(rotated.rows() - rank, rotated.cols() - rank);
  if (rest.size() > 0) {
    Eigen::JacobiSVD<Matrix> rest_svd(rest);
    gap = std::max(gap, rest_svd.singularValues()[0] - penalty.lambda);
  }
  return std::max(gap, 0.0);
}

double gap_from_grad(const Vector& grad, const Vector& b, const PenaltySpec& penalty,
                     const std::vector<char>& active, double support_tol) {
  switch (penalty.kind) {
    case PenaltyKind::none:
      return separable_gap(grad, b, 0.0, 0.0, active);
    case PenaltyKind::l1:
      return separable_gap(grad, b, penalty.lambda, 0.0, active);
    case PenaltyKind::elastic_net:
      return separable_gap(grad, b, penalty.lambda, penalty.mu, active);
    case PenaltyKind::nuclear:
      return nuclear_gap(grad, b, penalty, support_tol);
  }
  return std::numeric_limits<double>::infinity();
}

FitResult finalize(Vector beta, const LossSpec& loss, const PenaltySpec& penalty,
                   const Dataset& data, const SolverConfig& cfg, Algorithm algorithm,
                   int iterations) {
  FitResult out;
  out.beta_hat = std::move(beta);
  out.residual = data.y - data.X * out.beta_hat;
  LossValues lv = loss_eval_vec(loss, out.residual);
  out.psi_hat = std::move(lv.psi);
  out.psi_prime_hat = std::move(lv.psi_prime);
  const double threshold = support_threshold(out.beta_hat, cfg.support_tol);
  for (Index j = 0; j < out.beta_hat.size(); ++j) {
    if (std::abs(out.beta_hat[j]) > threshold) out.active_set.push_back(j);
  }
  for (Index i = 0; i < out.psi_prime_hat.size(); ++i) {
    if (out.psi_prime_hat[i] > 0.0) out.inlier_set.push_back(i);
  }
  const Vector grad = data.X.transpose() * out.psi_hat / double(data.n());
  out.kkt_gap = gap_from_grad(grad, out.beta_hat, penalty,
                              active_mask(out.beta_hat, threshold), cfg.support_tol);
  out.iterations = iterations;
  out.converged = out.kkt_gap <= cfg.kkt_tol;
  out.algorithm = algorithm;
  return out;
}

// ---------------------------------------------------------------------------
// Coordinate descent for  ||y - A b||^2 / (2n) + lambda ||b||_1 + mu ||b||^2 / 2.

struct LassoRun {
  Vector b;
  int sweeps = 0;
  double gap = std::numeric_limits<double>::infinity();
};

class LassoCD {
 public:
  LassoCD(const Matrix& A, const Vector& y, double lambda, double mu, double support_tol,
          std::vector<double>* trace)
      : A_(A), y_(y), lambda_(lambda), mu_(mu), support_tol_(support_tol), trace_(trace),
        n_(double(A.rows())) {
    col_sq_ = A_.colwise().squaredNorm().transpose() / n_;
  }

  LassoRun run(Vector b, double tol, int max_sweeps) {
    LassoRun out;
    r_ = y_ - A_ * b;
    while (out.sweeps < max_sweeps) {
      sweep_all(b);
      ++out.sweeps;
      while (out.sweeps < max_sweeps) {
        const double change = sweep_active(b);
        ++out.sweeps;
        if (change <= 0.1 * tol) break;
      }
      r_ = y_ - A_ * b;
      out.gap = gap(b);
      if (out.gap <= tol) break;
      if (polish(b, out.gap) && out.gap <= tol) break;
    }
    out.b = std::move(b);
    return out;
  }

  double gap(const Vector& b) const {
    const Vector grad = A_.transpose() * r_ / n_;
    return separable_gap(grad, b, lambda_, mu_,
                         active_mask(b, support_threshold(b, support_tol_)));
  }

 private:
  double objective(const Vector& b) const {
    return r_.squaredNorm() / (2.0 * n_) + lambda_ * b.lpNorm<1>() + 0.5 * mu_ * b.squaredNorm();
  }

  void record(const Vector& b) {
    if (trace_ != nullptr) trace_->push_back(objective(b));
  }

  double update(Vector& b, Index j) {
    const double denom = col_sq_[j] + mu_;
    if (denom <= 0.0) return 0.0;
    const double old = b[j];
    const double z = A_.col(j).dot(r_) / n_ + col_sq_[j] * old;
    const double fresh = soft_threshold(z, lambda_) / denom;
    const double delta = fresh - old;
    if (delta != 0.0) {
      r_.noalias() -= delta * A_.col(j);
      b[j] = fresh;
    }
    return std::abs(delta) * std::sqrt(col_sq_[j]);
  }

  void sweep_all(Vector& b) {
    for (Index j = 0; j < b.size(); ++j) update(b, j);
    record(b);
  }

  double sweep_active(Vector& b) {
    double change = 0.0;
    for (Index j = 0; j < b.size(); ++j) {
      if (b[j] != 0.0) change = std::max(change, update(b, j));
    }
    record(b);
    return change;
  }

  // Exact solve on the current support with signs held fixed. Accepted when
  // the signs survive and the KKT gap improves; the objective cannot increase
  // because the solution minimises the same quadratic over the support face.
  bool polish(Vector& b, double& current_gap) {
    std::vector<Index> support;
    for (Index j = 0; j < b.size(); ++j) {
      if (b[j] != 0.0) support.push_back(j);
    }
    if (support.empty() || support.size() > static_cast<std::size_t>(A_.rows()) * 2) {
      return false;
    }
    const auto k = static_cast<Index>(support.size());
    Matrix As(A_.rows(), k);
    Vector rhs(k);
    for (Index c = 0; c < k; ++c) {
      const Index j = support[static_cast<std::size_t>(c)];
      As.col(c) = A_.col(j);
      rhs[c] = A_.col(j).dot(y_) / n_ - lambda_ * sign_of(b[j]);
    }
    Matrix gram = As.transpose() * As / n_;
    gram.diagonal().array() += mu_;
    Eigen::LDLT<Matrix> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    const Vector sol = ldlt.solve(rhs);
    if (!sol.allFinite()) return false;
    for (Index c = 0; c < k; ++c) {
      if (sign_of(sol[c]) != sign_of(b[support[static_cast<std::size_t>(c)]])) return false;
    }
    Vector candidate = b;
    for (Index c = 0; c < k; ++c) candidate[support[static_cast<std::size_t>(c)]] = sol[c];
    const Vector saved_r = r_;
    r_ = y_ - A_ * candidate;
    const double candidate_gap = gap(candidate);
    if (candidate_gap < current_gap) {
      b = std::move(candidate);
      current_gap = candidate_gap;
      record(b);
      return true;
    }
    r_ = saved_r;
    return false;
  }

  const Matrix& A_;
  const Vector& y_;
  double lambda_;
  double mu_;
  double support_tol_;
  std::vector<double>* trace_;
  double n_;
  Vector col_sq_;
  Vector r_;
};

FitResult fit_coordinate_descent(const LossSpec& loss, const PenaltySpec& penalty,
                                 const Dataset& data, const SolverConfig& cfg,
                                 const std::optional<Vector>& warm) {
  if (loss.kind != LossKind::square || penalty.kind == PenaltyKind::nuclear) {
    throw UnsupportedPair("coordinate descent supports the square loss with none/l1/elastic_net");
  }
  const double mu = penalty.kind == PenaltyKind::elastic_net ? penalty.mu : 0.0;
  const double lambda = penalty.kind == PenaltyKind::none ? 0.0 : penalty.lambda;
  std::vector<double> trace;
  LassoCD cd(data.X, data.y, lambda, mu, cfg.support_tol,
             cfg.record_objective ? &trace : nullptr);
  LassoRun run = cd.run(warm ? *warm : Vector::Zero(data.p()), cfg.kkt_tol, cfg.max_iters);
  FitResult out = finalize(std::move(run.b), loss, penalty, data, cfg,
                           Algorithm::coordinate_descent, run.sweeps);
  out.objective_trace = std::move(trace);
  return out;
}

FitResult fit_augmented(const LossSpec& loss, const PenaltySpec& penalty, const Dataset& data,
                        const SolverConfig& cfg, const std::optional<Vector>& warm) {
  if (loss.kind != LossKind::huber || penalty.kind != PenaltyKind::l1 || !(penalty.lambda > 0.0)) {
    throw UnsupportedPair("the augmented Lasso route needs the huber loss with an l1 penalty, lambda > 0");
  }
  const double lambda_star = loss.scale / std::sqrt(double(data.n()));
  const AugmentedLasso aug = augment_huber(data, penalty.lambda, lambda_star);

  Vector b_aug = Vector::Zero(aug.data.p());
  if (warm) {
    b_aug.head(data.p()) = *warm;
    const Vector r = data.y - data.X * *warm;
    const Vector clipped = loss_psi(loss, r);
    b_aug.tail(data.n()) = (r - clipped) / aug.theta_scale;
  }

  std::vector<double> trace;
  LassoCD cd(aug.data.X, aug.data.y, penalty.lambda, 0.0, cfg.support_tol,
             cfg.record_objective ? &trace : nullptr);
  // The augmented gap controls the original one only up to a factor of
  // order scale / lambda, so tighten the inner tolerance until it does.
  double inner_tol = cfg.kkt_tol;
  int sweeps = 0;
  Vector beta;
  for (int attempt = 0; attempt < 6 && sweeps < cfg.max_iters; ++attempt) {
    LassoRun run = cd.run(std::move(b_aug), inner_tol, cfg.max_iters - sweeps);
    sweeps += run.sweeps;
    b_aug = std::move(run.b);
    beta = b_aug.head(data.p());
    if (kkt_gap(beta, loss, penalty, data, cfg.support_tol) <= cfg.kkt_tol) break;
    inner_tol *= 0.1;
  }
  FitResult out = finalize(std::move(beta), loss, penalty, data, cfg,
                           Algorithm::augmented_lasso, sweeps);
  out.objective_trace = std::move(trace);
  return out;
}

// ---------------------------------------------------------------------------
// Accelerated proximal gradient with function-value restart.

FitResult fit_fista(const LossSpec& loss, const PenaltySpec& penalty, const Dataset& data,
                    const SolverConfig& cfg, const std::optional<Vector>& warm) {
  const double n = double(data.n());
  const double op = operator_norm(data.X);
  // Power iteration approaches ||X|| from below; the margin keeps 1/L a valid step.
  double lipschitz = 1.02 * op * op / n;
  if (!(lipschitz > 0.0)) lipschitz = 1.0;
  double step = 1.0 / lipschitz;

  auto smooth = [&](const Vector& xb) { return loss_sum(loss, data.y - xb) / n; };
  auto gradient = [&](const Vector& xb) -> Vector {
    return -(data.X.transpose() * loss_psi(loss, data.y - xb)) / n;
  };

  Vector x = warm ? *warm : Vector::Zero(data.p());
  Vector xx = data.X * x;
  double fx = smooth(xx) + penalty.value(x);
  double f_current = fx;
  Vector yk = x;
  Vector xy = xx;
  double t = 1.0;
  std::vector<double> trace;
  constexpr int kCheckEvery = 10;

  int iter = 0;
  bool done = false;
  bool at_restart = false;
  Vector result = x;
  while (iter < cfg.max_iters && !done) {
    ++iter;
    Vector xn = prox_penalty(penalty, yk - step * gradient(xy), step);
    Vector xxn = data.X * xn;
    const double fn = smooth(xxn) + penalty.value(xn);
    // Objective comparisons are only meaningful above rounding level; below
    // it the KKT check decides convergence.
    const double slack = 1e-13 * std::max(1.0, std::abs(fx));
    if (fn > fx + slack) {
      // A plain proximal step from x that still increases the objective
      // means the step exceeds 1/L: back off.
      if (at_restart) step *= 0.5;
      t = 1.0;
      yk = x;
      xy = xx;
      at_restart = true;
    } else {
      at_restart = false;
      // Gradient-mapping restart: drop momentum when it points uphill.
      if ((yk - xn).dot(xn - x) > 0.0) t = 1.0;
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double momentum = (t - 1.0) / tn;
      yk = xn + momentum * (xn - x);
      xy = xxn + momentum * (xxn - xx);
      x = std::move(xn);
      xx = std::move(xxn);
      fx = std::min(fx, fn);
      f_current = fn;
      t = tn;
    }
    if (cfg.record_objective) trace.push_back(f_current);

    if (iter % kCheckEvery == 0 || iter == cfg.max_iters) {
      xx = data.X * x;
      Vector polished = prox_penalty(penalty, x - step * gradient(xx), step);
      const double gap = kkt_gap(polished, loss, penalty, data, cfg.support_tol);
      result = polished;
      if (gap <= cfg.kkt_tol) done = true;
    }
  }
  FitResult out = finalize(std::move(result), loss, penalty, data, cfg, Algorithm::fista, iter);
  out.objective_trace = std::move(trace);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void PenaltySpec::validate(Index p) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("penalty lambda must be a finite nonnegative number");
  }
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw ValidationError("penalty mu must be a finite nonnegative number");
  }
  if (kind == PenaltyKind::nuclear && rows * cols != p) {
    throw ValidationError("nuclear penalty: rows * cols must equal p");
  }
}

double PenaltySpec::value(const Vector& b) const {
  switch (kind) {
    case PenaltyKind::none:
      return 0.0;
    case PenaltyKind::l1:
      return lambda * b.lpNorm<1>();
    case PenaltyKind::elastic_net:
      return lambda * b.lpNorm<1>() + 0.5 * mu * b.squaredNorm();
    case PenaltyKind::nuclear: {
      Eigen::JacobiSVD<Matrix> svd(as_matrix(b, rows, cols));
      return lambda * svd.singularValues().sum();
    }
  }
  return 0.0;
}

std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::none:
      return "none";
    case PenaltyKind::l1:
      return "l1";
    case PenaltyKind::elastic_net:
      return "elastic_net";
    case PenaltyKind::nuclear:
      return "nuclear";
  }
  return "unknown";
}

PenaltyKind penalty_kind_from_string(std::string_view name) {
  if (name == "none") return PenaltyKind::none;
  if (name == "l1") return PenaltyKind::l1;
  if (name == "elastic_net") return PenaltyKind::elastic_net;
  if (name == "nuclear") return PenaltyKind::nuclear;
  throw ValidationError("unknown penalty kind '" + std::string(name) + "'");
}

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::automatic:
      return "auto";
    case Algorithm::coordinate_descent:
      return "coordinate_descent";
    case Algorithm::fista:
      return "fista";
    case Algorithm::augmented_lasso:
      return "augmented_lasso";
  }
  return "unknown";
}

Algorithm algorithm_from_string(std::string_view name) {
  if (name == "auto") return Algorithm::automatic;
  if (name == "coordinate_descent") return Algorithm::coordinate_descent;
  if (name == "fista") return Algorithm::fista;
  if (name == "augmented_lasso") return Algorithm::augmented_lasso;
  throw ValidationError("unknown algorithm '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
  if (max_iters < 1) throw ValidationError("solver.max_iters must be >= 1");
  if (!(kkt_tol > 0.0)) throw ValidationError("solver.kkt_tol must be > 0");
  if (!(support_tol > 0.0)) throw ValidationError("solver.support_tol must be > 0");
}

NotConverged::NotConverged(FitResult last)
    : Error("solver did not reach the KKT tolerance (gap " + format_double(last.kkt_gap) +
            " after " + std::to_string(last.iterations) + " iterations)"),
      last_(std::move(last)) {}

const FitResult& require_converged(const FitResult& result) {
  if (!result.converged) throw NotConverged(result);
  return result;
}

FitResult fit(const LossSpec& loss, const PenaltySpec& penalty, const Dataset& data,
              const SolverConfig& cfg, const std::optional<Vector>& warm_start) {
  data.validate();
  loss.validate();
  penalty.validate(data.p());
  cfg.validate();
  if (warm_start && warm_start->size() != data.p()) {
    throw DimensionMismatch("fit: warm start has the wrong length");
  }

  Algorithm algorithm = cfg.algorithm;
  if (algorithm == Algorithm::automatic) {
    if (loss.kind == LossKind::square && penalty.kind == PenaltyKind::l1) {
      algorithm = Algorithm::coordinate_descent;
    } else if (loss.kind == LossKind::huber && penalty.kind == PenaltyKind::l1 &&
               penalty.lambda > 0.0) {
      algorithm = Algorithm::augmented_lasso;
    } else {
      algorithm = Algorithm::fista;
    }
  }
  switch (algorithm) {
    case Algorithm::coordinate_descent:
      return fit_coordinate_descent(loss, penalty, data, cfg, warm_start);
    case Algorithm::augmented_lasso:
      return fit_augmented(loss, penalty, data, cfg, warm_start);
    case Algorithm::fista:
    case Algorithm::automatic:
      break;
  }
  return fit_fista(loss, penalty, data, cfg, warm_start);
}

double objective(const LossSpec& loss, const PenaltySpec& penalty, const Dataset& data,
                 const Vector& b) {
  return loss_sum(loss, data.y - data.X * b) / double(data.n()) + penalty.value(b);
}

Vector prox_penalty(const PenaltySpec& penalty, const Vector& v, double step) {
  if (!(step > 0.0)) throw ValidationError("prox_penalty: step must be > 0");
  switch (penalty.kind) {
    case PenaltyKind::none:
      return v;
    case PenaltyKind::l1:
    case PenaltyKind::elastic_net: {
      const double t = step * penalty.lambda;
      const double shrink = penalty.kind == PenaltyKind::elastic_net ? 1.0 + step * penalty.mu : 1.0;
      Vector out(v.size());
      for (Index j = 0; j < v.size(); ++j) out[j] = soft_threshold(v[j], t) / shrink;
      return out;
    }
    case PenaltyKind::nuclear: {
      if (penalty.rows * penalty.cols != v.size()) {
        throw DimensionMismatch("prox_penalty: rows * cols must equal the vector length");
      }
      if (!v.allFinite()) throw SvdFailure("prox_penalty: non-finite input to the SVD");
      Eigen::JacobiSVD<Matrix> svd(as_matrix(v, penalty.rows, penalty.cols),
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
      if (svd.info() != Eigen::Success) throw SvdFailure("prox_penalty: SVD did not converge");
      const Vector shrunk =
          (svd.singularValues().array() - step * penalty.lambda).cwiseMax(0.0).matrix();
      const Matrix z = svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
      return Eigen::Map<const Vector>(z.data(), z.size());
    }
  }
  return v;
}

AugmentedLasso augment_huber(const Dataset& data, double lambda, double lambda_star) {
  if (!(lambda > 0.0) || !(lambda_star > 0.0)) {
    throw ValidationError("augment_huber: lambda and lambda_star must be > 0");
  }
  data.validate();
  const Index n = data.n();
  const Index p = data.p();
  AugmentedLasso aug;
  aug.lambda = lambda;
  aug.lambda_star = lambda_star;
  aug.theta_scale = std::sqrt(double(n)) * lambda / lambda_star;
  aug.p = p;
  aug.data.X.resize(n, p + n);
  aug.data.X.leftCols(p) = data.X;
  aug.data.X.rightCols(n) = aug.theta_scale * Matrix::Identity(n, n);
  aug.data.y = data.y;
  return aug;
}

AugmentedLasso::BackMapped AugmentedLasso::back_map(const Vector& b_aug) const {
  if (b_aug.size() != data.p()) throw DimensionMismatch("back_map: wrong coefficient length");
  BackMapped out;
  out.beta = b_aug.head(p);
  out.theta = b_aug.tail(data.n());
  for (Index i = 0; i < out.theta.size(); ++i) {
    if (out.theta[i] == 0.0) out.inlier_set.push_back(i);
  }
  return out;
}

Vector AugmentedLasso::psi_hat(const Vector& b_aug) const { return data.y - data.X * b_aug; }

double kkt_gap(const Vector& beta_hat, const LossSpec& loss, const PenaltySpec& penalty,
               const Dataset& data, double support_tol) {
  if (beta_hat.size() != data.p() || data.y.size() != data.n()) {
    throw DimensionMismatch("kkt_gap: dimensions do not match the dataset");
  }
  const Vector psi = loss_psi(loss, data.y - data.X * beta_hat);
  const Vector grad = data.X.transpose() * psi / double(data.n());
  return gap_from_grad(grad, beta_hat, penalty,
                       active_mask(beta_hat, support_threshold(beta_hat, support_tol)),
                       support_tol);
}

double kkt_gap(const FitResult& result, const LossSpec& loss, const PenaltySpec& penalty,
               const Dataset& data) {
  if (result.beta_hat.size() != data.p() || result.psi_hat.size() != data.n()) {
    throw DimensionMismatch("kkt_gap: fit does not match the dataset");
  }
  std::vector<char> active(static_cast<std::size_t>(data.p()), 0);
  for (Index j : result.active_set) active[static_cast<std::size_t>(j)] = 1;
  const Vector psi = loss_psi(loss, data.y - data.X * result.beta_hat);
  const Vector grad = data.X.transpose() * psi / double(data.n());
  return gap_from_grad(grad, result.beta_hat, penalty, active, SolverConfig{}.support_tol);
}

double operator_norm(const Matrix& X, int iterations, double tol) {
  if (X.size() == 0) return 0.0;
  Vector v(X.cols());
  for (Index j = 0; j < v.size(); ++j) v[j] = 1.0 + 0.5 * std::sin(double(j) + 1.0);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector w = X.transpose() * (X * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double fresh = std::sqrt(norm);
    if (std::abs(fresh - estimate) <= tol * fresh) {
      estimate = fresh;
      break;
    }
    estimate = fresh;
  }
  return estimate;
}

}  // namespace hdrisk
