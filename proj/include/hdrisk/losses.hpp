#pragma once

#include <string_view>

#include "hdrisk/model_data.hpp"

namespace hdrisk {

enum class LossKind { square, huber, smooth_huber0, smooth_huber1 };

/// A convex loss rho with 1-Lipschitz derivative psi.
///
/// Scaled kinds evaluate rho(u) = scale^2 * rho_1(u / scale), so that
/// psi(u) = scale * psi_1(u / scale) and psi'(u) = psi_1'(u / scale).
/// `scale` is ignored for the square loss.
struct LossSpec {
  LossKind kind = LossKind::square;
  double scale = 1.0;

  static LossSpec square() { return {LossKind::square, 1.0}; }
  static LossSpec huber(double scale) { return {LossKind::huber, scale}; }
  static LossSpec smooth_huber0(double scale) { return {LossKind::smooth_huber0, scale}; }
  static LossSpec smooth_huber1(double scale) { return {LossKind::smooth_huber1, scale}; }

  void validate() const;
};

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view name);

struct LossValue {
  double rho;
  double psi;
  double psi_prime;
};

struct LossValues {
  Vector rho;
  Vector psi;
  Vector psi_prime;
};

LossValue loss_eval(const LossSpec& loss, double u);
LossValues loss_eval_vec(const LossSpec& loss, const Vector& u);

/// Componentwise psi only; the solvers' hot path.
Vector loss_psi(const LossSpec& loss, const Vector& u);
/// sum_i rho(u_i)
double loss_sum(const LossSpec& loss, const Vector& u);

}  // namespace hdrisk
