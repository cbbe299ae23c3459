#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hdrisk {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `hdrisk` executable. `args` excludes the program name.
///
///   fit        --data PATH [--loss ..] [--penalty ..] [--lambda ..] [--out PATH]
///   estimate   same as fit, plus [--sigma PATH] [--jacobian ..] [--seed N]
///   experiment --config PATH | --experiment NAME  [--out PATH] [--seed N]
///              [--threads N] [--paper-scale] [--no-timing]
///   selftest
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hdrisk
