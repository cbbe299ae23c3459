#include <doctest.h>

#include <cmath>

#include "hdrisk/errors.hpp"
#include "hdrisk/losses.hpp"

using namespace hdrisk;

namespace {

const LossKind kAll[] = {LossKind::square, LossKind::huber, LossKind::smooth_huber0,
                         LossKind::smooth_huber1};

void check_value(const LossValue& v, double rho, double psi, double dpsi) {
  CHECK(v.rho == doctest::Approx(rho).epsilon(1e-14));
  CHECK(v.psi == doctest::Approx(psi).epsilon(1e-14));
  CHECK(v.psi_prime == doctest::Approx(dpsi).epsilon(1e-14));
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("table values") {
  check_value(loss_eval(LossSpec::square(), 3.5), 6.125, 3.5, 1.0);
  check_value(loss_eval(LossSpec::huber(1.0), 2.0), 1.5, 1.0, 0.0);
  check_value(loss_eval(LossSpec::smooth_huber0(1.0), 2.0), 11.0 / 6.0, 1.5, 0.0);
  CHECK(loss_eval(LossSpec::smooth_huber1(1.0), 1.5).psi_prime == doctest::Approx(0.5));
  // interior of the transition pieces
  check_value(loss_eval(LossSpec::smooth_huber0(1.0), 1.5), 1.0 / 6.0 - 0.75 + 2.25 - 3.375 / 6.0,
              -0.5 + 3.0 - 1.125, 0.5);
  check_value(loss_eval(LossSpec::smooth_huber1(1.0), 3.0), 37.0 / 20.0 + 1.5, 1.5, 0.0);
}

TEST_CASE("huber kink counts as inlier") {
  CHECK(loss_eval(LossSpec::huber(2.0), 2.0).psi_prime == 1.0);
  CHECK(loss_eval(LossSpec::huber(2.0), -2.0).psi_prime == 1.0);
  CHECK(loss_eval(LossSpec::huber(2.0), 2.0 + 1e-12).psi_prime == 0.0);
}

TEST_CASE("odd psi, even rho and psi'") {
  for (LossKind kind : kAll) {
    const LossSpec loss{kind, 0.7};
    for (double u : {0.1, 0.7, 0.9, 1.2, 1.9, 5.0}) {
      const LossValue a = loss_eval(loss, u);
      const LossValue b = loss_eval(loss, -u);
      CHECK(a.rho == b.rho);
      CHECK(a.psi == -b.psi);
      CHECK(a.psi_prime == b.psi_prime);
    }
    const LossValue zero = loss_eval(loss, 0.0);
    CHECK(zero.rho == 0.0);
    CHECK(zero.psi == 0.0);
  }
}

TEST_CASE("vector evaluation") {
  Vector u(2);
  u << 1.0, 2.0;
  CHECK(loss_eval_vec(LossSpec::square(), u).psi == u);
  u << 0.5, -3.0;
  const Vector psi = loss_eval_vec(LossSpec::huber(1.0), u).psi;
  CHECK(psi[0] == 0.5);
  CHECK(psi[1] == -1.0);
  for (LossKind kind : kAll) {
    const LossSpec loss{kind, 1.3};
    const LossValues empty = loss_eval_vec(loss, Vector());
    CHECK(empty.rho.size() == 0);
    CHECK(empty.psi.size() == 0);
    CHECK(empty.psi_prime.size() == 0);
    const Vector w = Vector::LinSpaced(41, -6.0, 6.0);
    CHECK((loss_psi(loss, w) - loss_eval_vec(loss, w).psi).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(loss_sum(loss, w) == doctest::Approx(loss_eval_vec(loss, w).rho.sum()).epsilon(1e-14));
  }
}

TEST_CASE("psi is 1-Lipschitz and nondecreasing, psi' in [0, 1]") {
  for (LossKind kind : kAll) {
    for (double scale : {0.3, 1.0, 4.0}) {
      const LossSpec loss{kind, scale};
      constexpr int kPoints = 10'000;
      const double lo = -10.0 * scale;
      const double h = 20.0 * scale / (kPoints - 1);
      LossValue prev = loss_eval(loss, lo);
      for (int k = 1; k < kPoints; ++k) {
        const LossValue cur = loss_eval(loss, lo + k * h);
        REQUIRE(std::abs(cur.psi - prev.psi) <= h * (1.0 + 1e-9));
        REQUIRE(cur.psi >= prev.psi);
        REQUIRE(cur.psi_prime >= 0.0);
        REQUIRE(cur.psi_prime <= 1.0);
        prev = cur;
      }
    }
  }
}

TEST_CASE("rho is convex on a grid") {
  for (LossKind kind : kAll) {
    const LossSpec loss{kind, 1.0};
    const double h = 1e-2;
    for (double u = -5.0; u <= 5.0; u += 0.013) {
      const double second =
          loss_eval(loss, u + h).rho - 2.0 * loss_eval(loss, u).rho + loss_eval(loss, u - h).rho;
      REQUIRE(second >= -1e-12);
    }
  }
}

TEST_CASE("finite differences of rho and psi") {
  const double h = 1e-4;
  for (LossKind kind : kAll) {
    const LossSpec loss{kind, 1.0};
    const bool smooth = kind != LossKind::huber;
    for (double u = -4.0; u <= 4.0; u += 0.0137) {
      const bool near_kink = std::abs(std::abs(u) - 1.0) < 2 * h;
      const LossValue v = loss_eval(loss, u);
      if (!near_kink || smooth) {
        const double drho = (loss_eval(loss, u + h).rho - loss_eval(loss, u - h).rho) / (2 * h);
        REQUIRE(std::abs(drho - v.psi) <= 1e-7);
      }
      if (smooth) {
        const double dpsi = (loss_eval(loss, u + h).psi - loss_eval(loss, u - h).psi) / (2 * h);
        // psi is C^1 for rho_0 (C^0 psi' at 1 and 2) and C^2 for rho_1
        const double tol = kind == LossKind::smooth_huber1 ? 1e-6 : 1e-4;
        REQUIRE(std::abs(dpsi - v.psi_prime) <= tol);
      }
    }
  }
}

TEST_CASE("scaling is exact") {
  for (LossKind kind : {LossKind::huber, LossKind::smooth_huber0, LossKind::smooth_huber1}) {
    const LossSpec unit{kind, 1.0};
    for (double scale : {0.01, 0.37, 1.0, 2.5, 31.6}) {
      const LossSpec loss{kind, scale};
      for (double u = -50.0; u <= 50.0; u += 0.173) {
        const LossValue ref = loss_eval(unit, u / scale);
        const LossValue v = loss_eval(loss, u);
        REQUIRE(v.psi == scale * ref.psi);
        REQUIRE(v.psi_prime == ref.psi_prime);
        REQUIRE(v.rho == doctest::Approx(scale * scale * ref.rho).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("names and validation") {
  for (LossKind kind : kAll) CHECK(loss_kind_from_string(to_string(kind)) == kind);
  CHECK_THROWS_AS(loss_kind_from_string("absolute"), ValidationError);
  CHECK_THROWS_AS(LossSpec::huber(0.0).validate(), ValidationError);
  CHECK_THROWS_AS(LossSpec::smooth_huber1(-1.0).validate(), ValidationError);
  CHECK_NOTHROW(LossSpec::square().validate());
}

}
