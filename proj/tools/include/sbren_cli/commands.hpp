#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace sbren::cli {

enum ExitCode : int {
  kExitPass = 0,
  kExitFail = 1,      ///< at least one verdict FAIL
  kExitUsage = 2,     ///< bad arguments, configuration or structure
  kExitNumeric = 3,   ///< numeric or resource failure
  kExitExpectedFail = 4,  ///< converge verdict FAIL on a config declaring run.expect: fail
};

struct CliOptions {
  std::string command;
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  double tolerance_scale = 1.0;
};

/// Runs one of verify, converge, vanhove, spectrum, report. Progress and
/// diagnostics go to `log`; tables go to files in opts.out.
int run_command(const CliOptions& opts, std::ostream& log);

}  // namespace sbren::cli
