#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hdrisk/model_data.hpp"

namespace hdrisk {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Gaussian design with Sigma = I, the first `s` coefficients equal to
/// `amplitude`, N(0, sigma^2) noise; reproducible from `seed`.
Dataset random_instance(Index n, Index p, Index s, std::uint64_t seed, double amplitude = 1.0,
                        double sigma = 1.0);

/// Quick invariant suite on small instances (losses, KKT, estimator algebra,
/// Jacobian symmetry/PSD, augmented-vs-direct Huber, closed form vs finite
/// differences, Monte Carlo vs closed form).
std::vector<CheckResult> run_selftest();

/// One "PASS name (detail)" / "FAIL ..." line per check; returns true if all passed.
bool report_checks(std::ostream& out, const std::vector<CheckResult>& checks);

}  // namespace hdrisk
