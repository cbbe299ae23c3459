#include <doctest.h>

#include <cmath>
#include <random>

#include "hdrisk/errors.hpp"
#include "hdrisk/jacobians.hpp"
#include "hdrisk/selftest.hpp"
#include "hdrisk/solvers.hpp"
#include "test_support.hpp"

using namespace hdrisk;
using hdrisk::testing::max_abs;

namespace {

double lambda_max(const Dataset& d) {
  return (d.X.transpose() * d.y).cwiseAbs().maxCoeff() / double(d.n());
}

void check_fit_invariants(const FitResult& r, const LossSpec& loss, const Dataset& d,
                          const SolverConfig& cfg) {
  const Vector resid = d.y - d.X * r.beta_hat;
  CHECK(max_abs(r.residual - resid) <= 1e-12 * (1.0 + resid.cwiseAbs().maxCoeff()));
  CHECK(max_abs(r.psi_hat - loss_psi(loss, r.residual)) == 0.0);
  const double thr = cfg.support_tol * (1.0 + r.beta_hat.cwiseAbs().maxCoeff());
  std::vector<Index> active;
  for (Index j = 0; j < r.beta_hat.size(); ++j) {
    if (std::abs(r.beta_hat[j]) > thr) active.push_back(j);
  }
  CHECK(r.active_set == active);
  std::vector<Index> inliers;
  for (Index i = 0; i < d.n(); ++i) {
    if (loss_eval(loss, r.residual[i]).psi_prime > 0.0) inliers.push_back(i);
  }
  CHECK(r.inlier_set == inliers);
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("lasso at lambda_max is zero") {
  const Dataset d = random_instance(30, 40, 5, 1);
  const FitResult r = fit(LossSpec::square(), PenaltySpec::l1(lambda_max(d)), d);
  CHECK(r.converged);
  CHECK(r.beta_hat.isZero(0.0));
  CHECK(r.active_set.empty());
}

TEST_CASE("two-point lasso") {
  Dataset d{Matrix::Ones(2, 1), Vector(2)};
  d.y << 3.0, 1.0;
  const LossSpec loss = LossSpec::square();
  const PenaltySpec pen = PenaltySpec::l1(0.5);
  // grid oracle on (1/(2n)) ||y - X b||^2 + lambda |b|
  double best_b = 0.0;
  double best_f = std::numeric_limits<double>::infinity();
  for (int k = -400'000; k <= 400'000; ++k) {
    const double b = k * 1e-5;
    const double f = objective(loss, pen, d, Vector::Constant(1, b));
    if (f < best_f) {
      best_f = f;
      best_b = b;
    }
  }
  CHECK(best_b == doctest::Approx(1.5).epsilon(1e-5));
  for (Algorithm alg : {Algorithm::automatic, Algorithm::coordinate_descent, Algorithm::fista}) {
    SolverConfig cfg;
    cfg.algorithm = alg;
    const FitResult r = fit(loss, pen, d, cfg);
    CHECK(r.converged);
    CHECK(r.beta_hat[0] == doctest::Approx(best_b).epsilon(1e-5));
    CHECK(r.beta_hat[0] == doctest::Approx(1.5).epsilon(1e-9));
  }
}

TEST_CASE("proximal maps") {
  CHECK(prox_penalty(PenaltySpec::l1(0.5), Vector::Constant(1, 2.0), 1.0)[0] == 1.5);
  CHECK(prox_penalty(PenaltySpec::l1(0.5), Vector::Constant(1, -0.3), 1.0)[0] == 0.0);
  CHECK(prox_penalty(PenaltySpec::elastic_net(0.5, 1.0), Vector::Constant(1, 2.0), 1.0)[0] ==
        doctest::Approx(0.75).epsilon(1e-15));
  CHECK(prox_penalty(PenaltySpec::none(), Vector::Constant(1, 2.0), 1.0)[0] == 2.0);

  Matrix m = Matrix::Zero(2, 3);
  m(0, 0) = 3.0;
  m(1, 1) = 1.0;
  const Vector v = Eigen::Map<const Vector>(m.data(), m.size());
  const Vector out = prox_penalty(PenaltySpec::nuclear(2.0, 2, 3), v, 1.0);
  Matrix expected = Matrix::Zero(2, 3);
  expected(0, 0) = 1.0;
  CHECK(max_abs(Eigen::Map<const Matrix>(out.data(), 2, 3) - expected) <= 1e-14);

  Vector bad = v;
  bad[1] = std::nan("");
  CHECK_THROWS_AS(prox_penalty(PenaltySpec::nuclear(2.0, 2, 3), bad, 1.0), SvdFailure);
}

TEST_CASE("elastic-net prox solves its scalar problem") {
  const PenaltySpec pen = PenaltySpec::elastic_net(0.3, 0.7);
  for (double v : {-3.0, -0.2, 0.1, 0.9, 4.0}) {
    for (double step : {0.1, 1.0, 2.5}) {
      const double z = prox_penalty(pen, Vector::Constant(1, v), step)[0];
      auto f = [&](double t) { return (t - v) * (t - v) / (2 * step) + pen.value(Vector::Constant(1, t)); };
      CHECK(f(z) <= f(z + 1e-6));
      CHECK(f(z) <= f(z - 1e-6));
    }
  }
}

TEST_CASE("huber lasso: augmented route matches direct solve") {
  const Dataset d = random_instance(20, 30, 3, 2);
  const double lambda = 0.1;
  const LossSpec loss = LossSpec::huber(huber_scale_from_lambda_star(d.n(), 0.15));
  SolverConfig a_cfg;
  a_cfg.algorithm = Algorithm::augmented_lasso;
  SolverConfig f_cfg;
  f_cfg.algorithm = Algorithm::fista;
  const FitResult a = fit(loss, PenaltySpec::l1(lambda), d, a_cfg);
  const FitResult b = fit(loss, PenaltySpec::l1(lambda), d, f_cfg);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(max_abs(a.beta_hat - b.beta_hat) <= 1e-6);
  CHECK(fit(loss, PenaltySpec::l1(lambda), d).algorithm == Algorithm::augmented_lasso);
}

TEST_CASE("augmented and direct huber fits agree to 10 kkt_tol") {
  // A tight tolerance on both routes; the routes then agree to the accuracy
  // their certificates allow.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset d = random_instance(40, 30, 4, 100 + seed);
    const LossSpec loss = LossSpec::huber(huber_scale_from_lambda_star(d.n(), 0.1));
    SolverConfig cfg;
    cfg.kkt_tol = 1e-11;
    cfg.algorithm = Algorithm::augmented_lasso;
    const FitResult a = fit(loss, PenaltySpec::l1(0.05), d, cfg);
    cfg.algorithm = Algorithm::fista;
    const FitResult b = fit(loss, PenaltySpec::l1(0.05), d, cfg);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK(max_abs(a.beta_hat - b.beta_hat) <= 10 * cfg.kkt_tol);
  }
}

TEST_CASE("augmented lasso with huge lambda_star is the plain lasso") {
  const Dataset d = random_instance(30, 20, 4, 3);
  const double lambda = 0.08;
  const AugmentedLasso aug = augment_huber(d, lambda, 1e6);
  SolverConfig cfg;
  cfg.kkt_tol = 1e-10;
  const FitResult r_aug = fit(LossSpec::square(), PenaltySpec::l1(lambda), aug.data, cfg);
  const auto mapped = aug.back_map(r_aug.beta_hat);
  CHECK(mapped.theta.isZero(0.0));
  const FitResult lasso = fit(LossSpec::square(), PenaltySpec::l1(lambda), d, cfg);
  CHECK(max_abs(mapped.beta - lasso.beta_hat) <= 1e-4);
}

TEST_CASE("augmented lasso flags a gross outlier") {
  Dataset d = random_instance(40, 20, 3, 4);
  const double lambda = 0.05;
  const double lambda_star = 0.2;
  const LossSpec loss = LossSpec::huber(huber_scale_from_lambda_star(d.n(), lambda_star));
  const FitResult clean = fit(loss, PenaltySpec::l1(lambda), d);
  const Index target = 7;
  REQUIRE(std::find(clean.inlier_set.begin(), clean.inlier_set.end(), target) !=
          clean.inlier_set.end());
  d.y[target] += 100.0;
  const FitResult dirty = fit(loss, PenaltySpec::l1(lambda), d);
  CHECK(dirty.converged);
  CHECK(std::find(dirty.inlier_set.begin(), dirty.inlier_set.end(), target) ==
        dirty.inlier_set.end());

  const AugmentedLasso aug = augment_huber(d, lambda, lambda_star);
  SolverConfig cfg;
  cfg.kkt_tol = 1e-12;
  const FitResult r_aug = fit(LossSpec::square(), PenaltySpec::l1(lambda), aug.data, cfg);
  const auto mapped = aug.back_map(r_aug.beta_hat);
  CHECK(mapped.theta[target] != 0.0);
  // psi_hat of the augmented problem is the clipped residual of the original
  const Vector clipped = loss_psi(loss, d.y - d.X * mapped.beta);
  CHECK(max_abs(aug.psi_hat(r_aug.beta_hat) - clipped) <= 1e-8);
}

TEST_CASE("inliers and outliers partition the sample") {
  RngStream rng(5, 0);
  Dataset d{Matrix(5, 2), Vector(5)};
  std::normal_distribution<double> nd;
  for (Index i = 0; i < 5; ++i) {
    d.X(i, 0) = nd(rng);
    d.X(i, 1) = nd(rng);
    d.y[i] = 3.0 * nd(rng);
  }
  d.y[2] += 20.0;
  const AugmentedLasso aug = augment_huber(d, 0.05, 0.3);
  SolverConfig cfg;
  cfg.kkt_tol = 1e-12;
  const FitResult r = fit(LossSpec::square(), PenaltySpec::l1(0.05), aug.data, cfg);
  const auto mapped = aug.back_map(r.beta_hat);
  std::vector<int> covered(5, 0);
  for (Index i : mapped.inlier_set) covered[static_cast<std::size_t>(i)] += 1;
  for (Index i = 0; i < 5; ++i) {
    if (mapped.theta[i] != 0.0) covered[static_cast<std::size_t>(i)] += 1;
  }
  for (int c : covered) CHECK(c == 1);
  CHECK(mapped.theta[2] != 0.0);
}

TEST_CASE("kkt gap examples") {
  const Dataset d = random_instance(30, 40, 5, 6);
  const LossSpec loss = LossSpec::square();
  CHECK(kkt_gap(Vector::Zero(40), loss, PenaltySpec::l1(2.0 * lambda_max(d)), d) == 0.0);

  const PenaltySpec pen = PenaltySpec::l1(0.1);
  const FitResult r = fit(loss, pen, d);
  REQUIRE(r.converged);
  REQUIRE(!r.active_set.empty());
  CHECK(kkt_gap(r, loss, pen, d) <= SolverConfig{}.kkt_tol);
  Vector moved = r.beta_hat;
  moved[r.active_set.front()] += 0.1;
  CHECK(kkt_gap(moved, loss, pen, d) > 1e-3);
}

TEST_CASE("converged fits satisfy KKT over a random suite") {
  const SolverConfig cfg;
  int count = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Dataset d = random_instance(30 + 5 * Index(seed), 40, 5, 200 + seed);
    const double scale = huber_scale_from_lambda_star(d.n(), 0.1);
    const std::vector<std::pair<LossSpec, PenaltySpec>> cases = {
        {LossSpec::square(), PenaltySpec::l1(0.05)},
        {LossSpec::square(), PenaltySpec::elastic_net(0.05, 0.1)},
        {LossSpec::huber(scale), PenaltySpec::l1(0.05)},
        {LossSpec::huber(scale), PenaltySpec::elastic_net(0.05, 0.2)},
        {LossSpec::smooth_huber0(1.0), PenaltySpec::l1(0.1)},
        {LossSpec::smooth_huber1(1.0), PenaltySpec::elastic_net(0.02, 0.5)},
        {LossSpec::square(), PenaltySpec::nuclear(0.2, 5, 8)},
        {LossSpec::huber(scale), PenaltySpec::nuclear(0.2, 8, 5)},
    };
    for (const auto& [loss, pen] : cases) {
      const FitResult r = fit(loss, pen, d, cfg);
      CHECK(r.converged);
      CHECK(r.kkt_gap <= cfg.kkt_tol);
      CHECK(kkt_gap(r, loss, pen, d) == doctest::Approx(r.kkt_gap));
      check_fit_invariants(r, loss, d, cfg);
      ++count;
    }
  }
  CHECK(count == 64);
}

TEST_CASE("ordinary least squares") {
  const Dataset d = random_instance(50, 10, 3, 7);
  for (Algorithm alg : {Algorithm::automatic, Algorithm::coordinate_descent, Algorithm::fista}) {
    SolverConfig cfg;
    cfg.algorithm = alg;
    cfg.kkt_tol = 1e-11;
    const FitResult r = fit(LossSpec::square(), PenaltySpec::none(), d, cfg);
    CHECK(r.converged);
    const Vector ls = d.X.colPivHouseholderQr().solve(d.y);
    CHECK(max_abs(r.beta_hat - ls) <= 1e-8);
  }
}

TEST_CASE("objective is monotone along iterations") {
  const Dataset d = random_instance(40, 60, 6, 8);
  const double scale = huber_scale_from_lambda_star(d.n(), 0.1);
  const std::vector<std::tuple<LossSpec, PenaltySpec, Algorithm>> cases = {
      {LossSpec::square(), PenaltySpec::l1(0.05), Algorithm::coordinate_descent},
      {LossSpec::huber(scale), PenaltySpec::l1(0.05), Algorithm::augmented_lasso},
      {LossSpec::huber(scale), PenaltySpec::l1(0.05), Algorithm::fista},
      {LossSpec::square(), PenaltySpec::elastic_net(0.05, 0.3), Algorithm::fista},
      {LossSpec::square(), PenaltySpec::nuclear(0.1, 6, 10), Algorithm::fista},
  };
  for (const auto& [loss, pen, alg] : cases) {
    SolverConfig cfg;
    cfg.algorithm = alg;
    cfg.record_objective = true;
    const FitResult r = fit(loss, pen, d, cfg);
    REQUIRE(r.objective_trace.size() >= 2);
    double best = r.objective_trace.front();
    for (double f : r.objective_trace) {
      CHECK(f <= best + 1e-12 * std::max(1.0, std::abs(best)));
      best = std::min(best, f);
    }
    if (alg != Algorithm::augmented_lasso) {
      CHECK(r.objective_trace.back() ==
            doctest::Approx(objective(loss, pen, d, r.beta_hat)).epsilon(1e-9));
    }
  }
}

TEST_CASE("change of variables for scalar covariance") {
  const double c = 3.0;
  const Index n = 60;
  const Index p = 40;
  RngStream rng(9, 0);
  Vector beta = Vector::Zero(p);
  beta.head(5).setConstant(1.0);
  auto [d, truth] =
      gen_dataset(n, Matrix(c * Matrix::Identity(p, p)), beta, GaussianNoise{1.0}, rng);
  const double lambda = 0.2;
  SolverConfig cfg;
  cfg.kkt_tol = 1e-12;
  const FitResult r = fit(LossSpec::square(), PenaltySpec::l1(lambda), d, cfg);

  const Dataset z{d.X / std::sqrt(c), d.y};
  const FitResult rz = fit(LossSpec::square(), PenaltySpec::l1(lambda / std::sqrt(c)), z, cfg);
  CHECK(max_abs(rz.beta_hat / std::sqrt(c) - r.beta_hat) <= 1e-9);
  CHECK(max_abs(rz.psi_hat - r.psi_hat) <= 1e-9);
  CHECK(max_abs(z.X * rz.beta_hat - d.X * r.beta_hat) <= 1e-9);
  const auto f = closed_form_factors(r, LossSpec::square(), PenaltySpec::l1(lambda), d);
  const auto fz =
      closed_form_factors(rz, LossSpec::square(), PenaltySpec::l1(lambda / std::sqrt(c)), z);
  CHECK(f.df_hat == fz.df_hat);
  const double oos = oos_error(r.beta_hat, truth);
  const double oos_z = (rz.beta_hat - std::sqrt(c) * beta).squaredNorm();
  CHECK(oos == doctest::Approx(oos_z).epsilon(1e-9));
}

TEST_CASE("nuclear-norm fit") {
  RngStream rng(10, 0);
  const Vector beta = gen_signal(LowRankSignal{6, 8, 2}, 48, rng);
  auto [d, truth] = gen_dataset(80, Matrix(Matrix::Identity(48, 48)), beta, GaussianNoise{0.5}, rng);
  const PenaltySpec pen = PenaltySpec::nuclear(0.15, 6, 8);
  SolverConfig cfg;
  cfg.kkt_tol = 1e-10;
  const FitResult r = fit(LossSpec::square(), pen, d, cfg);
  CHECK(r.converged);
  CHECK(r.algorithm == Algorithm::fista);
  const Eigen::Map<const Matrix> mat(r.beta_hat.data(), 6, 8);
  Eigen::JacobiSVD<Matrix> svd(mat);
  const Index rank = (svd.singularValues().array() > 1e-8).count();
  CHECK(rank >= 1);
  CHECK(rank < 6);
  // the solution is a fixed point of the proximal gradient map
  const Vector grad = -d.X.transpose() * r.psi_hat / 80.0;
  const Vector step = prox_penalty(pen, r.beta_hat - 0.01 * grad, 0.01);
  CHECK(max_abs(step - r.beta_hat) <= 1e-9);
}

TEST_CASE("non-convergence is reported") {
  const Dataset d = random_instance(30, 40, 5, 11);
  SolverConfig cfg;
  cfg.max_iters = 1;
  cfg.algorithm = Algorithm::fista;
  const FitResult r = fit(LossSpec::square(), PenaltySpec::l1(0.01), d, cfg);
  CHECK_FALSE(r.converged);
  CHECK_THROWS_AS(require_converged(r), NotConverged);
  try {
    require_converged(r);
  } catch (const NotConverged& e) {
    CHECK(e.last().kkt_gap == r.kkt_gap);
  }
}

TEST_CASE("warm start reaches the same solution") {
  const Dataset d = random_instance(30, 40, 5, 12);
  const LossSpec loss = LossSpec::huber(huber_scale_from_lambda_star(30, 0.1));
  const FitResult cold = fit(loss, PenaltySpec::l1(0.05), d);
  const FitResult warm = fit(loss, PenaltySpec::l1(0.05), d, {}, Vector(cold.beta_hat));
  CHECK(warm.converged);
  CHECK(warm.iterations <= cold.iterations);
  CHECK(max_abs(warm.beta_hat - cold.beta_hat) <= 1e-6);
}

TEST_CASE("operator norm") {
  const Dataset d = random_instance(30, 20, 3, 13);
  Eigen::JacobiSVD<Matrix> svd(d.X);
  CHECK(operator_norm(d.X) == doctest::Approx(svd.singularValues()[0]).epsilon(1e-6));
  CHECK(operator_norm(Matrix::Zero(3, 2)) == 0.0);
}

TEST_CASE("validation and unsupported routes") {
  CHECK_THROWS_AS(PenaltySpec::l1(-1.0).validate(5), ValidationError);
  CHECK_THROWS_AS(PenaltySpec::elastic_net(0.1, -1.0).validate(5), ValidationError);
  CHECK_THROWS_AS(PenaltySpec::nuclear(0.1, 2, 3).validate(5), ValidationError);
  CHECK_NOTHROW(PenaltySpec::nuclear(0.1, 1, 5).validate(5));
  SolverConfig bad;
  bad.kkt_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  const Dataset d = random_instance(10, 5, 2, 14);
  SolverConfig cfg;
  cfg.algorithm = Algorithm::coordinate_descent;
  CHECK_THROWS_AS(fit(LossSpec::huber(1.0), PenaltySpec::l1(0.1), d, cfg), UnsupportedPair);
  cfg.algorithm = Algorithm::augmented_lasso;
  CHECK_THROWS_AS(fit(LossSpec::square(), PenaltySpec::l1(0.1), d, cfg), UnsupportedPair);
  CHECK_THROWS_AS(fit(LossSpec::square(), PenaltySpec::l1(0.1), d, {}, Vector(Vector::Zero(3))),
                  DimensionMismatch);
  for (Algorithm a : {Algorithm::automatic, Algorithm::coordinate_descent, Algorithm::fista,
                      Algorithm::augmented_lasso}) {
    CHECK(algorithm_from_string(to_string(a)) == a);
  }
  for (PenaltyKind k : {PenaltyKind::none, PenaltyKind::l1, PenaltyKind::elastic_net,
                        PenaltyKind::nuclear}) {
    CHECK(penalty_kind_from_string(to_string(k)) == k);
  }
}

}
