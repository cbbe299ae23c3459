#include "hdrisk/losses.hpp"

#include <cmath>
#include <string>

#include "hdrisk/errors.hpp"

namespace hdrisk {

namespace {

// Unit-scale losses on u >= 0; callers extend by symmetry.
LossValue huber_unit(double u) {
  if (u <= 1.0) {
    return {0.5 * u * u, u, 1.0};
  }
  return {u - 0.5, 1.0, 0.0};
}

LossValue smooth_huber0_unit(double u) {
  if (u <= 1.0) {
    return {0.5 * u * u, u, 1.0};
  }
  if (u <= 2.0) {
    return {1.0 / 6.0 - u / 2.0 + u * u - u * u * u / 6.0, -0.5 + 2.0 * u - 0.5 * u * u, 2.0 - u};
  }
  return {-7.0 / 6.0 + 1.5 * u, 1.5, 0.0};
}

LossValue smooth_huber1_unit(double u) {
  if (u <= 1.0) {
    return {0.5 * u * u, u, 1.0};
  }
  if (u <= 2.0) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double rho = u3 * u2 / 10.0 - 0.75 * u2 * u2 + 2.0 * u3 - 2.0 * u2 + 1.5 * u - 7.0 / 20.0;
    const double psi = 1.5 + (u - 2.0) * (u - 2.0) * (u - 2.0) * u / 2.0;
    const double dpsi = 2.0 * u3 - 9.0 * u2 + 12.0 * u - 4.0;
    return {rho, psi, dpsi};
  }
  return {37.0 / 20.0 + 1.5 * (u - 2.0), 1.5, 0.0};
}

}  // namespace

void LossSpec::validate() const {
  if (kind != LossKind::square && !(scale > 0.0 && std::isfinite(scale))) {
    throw ValidationError("loss scale must be a finite positive number");
  }
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::square:
      return "square";
    case LossKind::huber:
      return "huber";
    case LossKind::smooth_huber0:
      return "smooth_huber0";
    case LossKind::smooth_huber1:
      return "smooth_huber1";
  }
  return "unknown";
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "square") return LossKind::square;
  if (name == "huber") return LossKind::huber;
  if (name == "smooth_huber0") return LossKind::smooth_huber0;
  if (name == "smooth_huber1") return LossKind::smooth_huber1;
  throw ValidationError("unknown loss kind '" + std::string(name) + "'");
}

LossValue loss_eval(const LossSpec& loss, double u) {
  if (loss.kind == LossKind::square) {
    return {0.5 * u * u, u, 1.0};
  }
  const double s = loss.scale;
  const double t = std::abs(u) / s;
  LossValue unit{};
  switch (loss.kind) {
    case LossKind::huber:
      unit = huber_unit(t);
      break;
    case LossKind::smooth_huber0:
      unit = smooth_huber0_unit(t);
      break;
    case LossKind::smooth_huber1:
      unit = smooth_huber1_unit(t);
      break;
    case LossKind::square:
      break;
  }
  const double sign = u < 0.0 ? -1.0 : 1.0;
  return {s * s * unit.rho, sign * s * unit.psi, unit.psi_prime};
}

LossValues loss_eval_vec(const LossSpec& loss, const Vector& u) {
  LossValues out{Vector(u.size()), Vector(u.size()), Vector(u.size())};
  for (Index i = 0; i < u.size(); ++i) {
    const LossValue v = loss_eval(loss, u[i]);
    out.rho[i] = v.rho;
    out.psi[i] = v.psi;
    out.psi_prime[i] = v.psi_prime;
  }
  return out;
}

Vector loss_psi(const LossSpec& loss, const Vector& u) {
  switch (loss.kind) {
    case LossKind::square:
      return u;
    case LossKind::huber:
      return loss.scale * (u / loss.scale).cwiseMax(-1.0).cwiseMin(1.0);
    default: {
      Vector out(u.size());
      for (Index i = 0; i < u.size(); ++i) out[i] = loss_eval(loss, u[i]).psi;
      return out;
    }
  }
}

double loss_sum(const LossSpec& loss, const Vector& u) {
  if (loss.kind == LossKind::square) {
    return 0.5 * u.squaredNorm();
  }
  double total = 0.0;
  for (Index i = 0; i < u.size(); ++i) total += loss_eval(loss, u[i]).rho;
  return total;
}

}  // namespace hdrisk
