#pragma once

// YAML run configuration for the sbren command line tool.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbren/errors.hpp"
#include "sbren/model.hpp"
#include "sbren/renorm.hpp"

namespace sbren::cli {

/// Invalid configuration. The message names the key path and source line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct GridConfig {
  std::string family = "power_law";  ///< "power_law" or "explicit"
  double beta = 0.0;
  double kappa = 1.0;
  double lambda_max = 16.0;
  int n_modes = 4;
  std::vector<Mode> modes;           ///< explicit family only
  std::vector<double> profile;       ///< explicit family only (default 1)
};

struct ProfileConfig {
  std::optional<std::vector<double>> v_le, v_d, v_n;
};

struct Tolerances {
  double identity = 1e-10;      ///< exact identities on truncation-safe blocks
  double inversion = 1e-13;
  double weyl = 1e-7;           ///< identities involving the dense Weyl factor
  double bound_slack = 1e-9;
  double appendix = 1e-9;
  double oracle = 1e-6;
};

struct VerifyConfig {
  int n_modes = 3;
  int n_max = 12;
  std::optional<double> lambda_max;
  int samples = 100;
};

struct RunConfig {
  std::string name;
  GridConfig grid;
  int spin_dim = 2;
  SpinMatrix s, b_le, b_d, b_n;
  double coupling = 1.0;
  ProfileConfig profiles;
  int n_max = 3;
  double lambda = 1.0;
  double s_n = 2.0;
  std::vector<double> schedule;
  std::uint64_t seed = 1;
  std::string expect = "pass";  ///< "pass" or "fail" (expected-fail demos)
  Tolerances tol;
  VerifyConfig verify;

  std::string source;  ///< raw file contents, hashed into the config hash
};

/// Parses and validates a configuration file. Throws ConfigError.
RunConfig parse_config(const std::string& path);
/// Same for in-memory text; `origin` is used in diagnostics.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

/// Matrix expression: sigma_x, sigma_y, sigma_z, sigma_minus, sigma_plus,
/// identity(n), zero(n), kron(a, b), kron_power(a, k) and sums a + b. Throws ConfigError.
SpinMatrix parse_matrix_expression(const std::string& expr);

/// Hamiltonian on a concrete grid.
struct Problem {
  GridPtr grid;
  renorm::HamiltonianSpec spec;
};

/// The study problem (full grid) or the reduced verification problem, whose
/// power-law grid uses verify.n_modes modes.
Problem build_problem(const RunConfig& cfg, bool reduced = false);

/// FNV-1a 64-bit hash of the file contents, seed and tolerance scale, as 16 hex digits.
std::string config_hash(const RunConfig& cfg, double tolerance_scale);

}  // namespace sbren::cli
