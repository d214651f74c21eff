#pragma once

// Regular and renormalized spin-boson Hamiltonians, cutoff convergence
// studies and the van Hove divergence demo.

#include <cstdint>
#include <string>
#include <vector>

#include "sbren/fock.hpp"
#include "sbren/linalg.hpp"
#include "sbren/model.hpp"
#include "sbren/operator.hpp"

namespace sbren::renorm {

struct HamiltonianSpec {
  SpinMatrix s;
  CouplingDecomposition coupling;
  double lambda = 1.0;

  /// Throws StructuralError if S is not self-adjoint within 1e-12 or the
  /// shapes disagree, ParameterError if lambda <= 0.
  void validate() const;
};

/// S (x) Id + dGamma(omega) + phi(V).
Operator h_reg(const BasisPtr& basis, const SpinMatrix& s, const FormFactor& v);

/// h_reg(S, V) + <V_gt, V_gt>_{b_1} (x) Id.
Operator h_corrected(const BasisPtr& basis, const SpinMatrix& s, const FormFactor& v);

/// S + W(omega^{-1} V_D) (Xi_lambda(V_N) + phi(V_le)) W(omega^{-1} V_D)^* - lambda.
///
/// Throws StructuralError if the coupling decomposition fails its structure
/// checks and ParameterError (asking to enlarge kappa) if V_N is not
/// admissible. The Weyl factor is dense, so V_D != 0 needs a basis within the
/// dense limit.
Operator h_renormalized(const BasisPtr& basis, const HamiltonianSpec& spec);

/// max |entry| of the compression to <= block bosons of
/// h_renormalized - h_corrected(S, V). block defaults to n_max - 2 without a
/// dressing part and to dressing::weyl_safe_block of W(omega^{-1} V_D) with
/// one (ParameterError if no block is safe).
double renormalized_identity_deviation(const BasisPtr& basis, const HamiltonianSpec& spec, int block = -1);

/// Largest eigenvalue difference of the compressed h_renormalized between
/// spec.lambda and each entry of `lambdas` (same default block).
double lambda_spread(const BasisPtr& basis, const HamiltonianSpec& spec, const std::vector<double>& lambdas,
                     int block = -1);

struct ConvergenceRow {
  double cutoff = 0.0;
  double e_trace = 0.0;                ///< Re tr <V_Lambda,gt, V_Lambda,gt>_{b_1}
  double resolvent_distance = 0.0;     ///< ||(H_Lambda + i)^{-1} - (H + i)^{-1}||
  double distance_error = 0.0;         ///< a-posteriori error estimate of the norm
  double ground_energy_reg = 0.0;      ///< inf spec h_reg(S, V_Lambda)
  double ground_energy_renorm = 0.0;   ///< inf spec h_corrected(S, V_Lambda)
};

struct ConvergenceOptions {
  bool distances = true;
  bool ground_energies = true;
  double jitter = 0.10;
  double decay = 0.10;
  int jobs = 1;
  NormOptions norm;
};

struct ConvergenceReport {
  std::vector<double> schedule;
  std::vector<ConvergenceRow> rows;
  double limit_ground_energy = 0.0;
  std::size_t limit_components = 0;
  Eigen::Index largest_factorization = 0;
  bool nonincreasing = true;
  double decay_ratio = 0.0;   ///< D_last / D_first (0 when D_first = 0)
  bool pass = false;
};

/// For each cutoff Lambda of the strictly increasing schedule compares
/// h_corrected(S, V_Lambda) with the limit operator on the same grid. The
/// limit operator is h_corrected(S, V), which equals h_renormalized(spec) on
/// the grid (checked separately by renormalized_identity_deviation) and
/// unlike it stays sparse.
ConvergenceReport convergence_study(const BasisPtr& basis, const HamiltonianSpec& spec,
                                    const std::vector<double>& schedule, const ConvergenceOptions& opts = {});

struct VanHoveRow {
  double cutoff = 0.0;
  double b0_norm_sq = 0.0;          ///< ||omega^{-1} v_Lambda||_{b_0}^2
  double shift = 0.0;               ///< sum mu |v_Lambda|^2 / omega
  double conjugation_distance = 0.0;
  double parity = 0.0;
  double parity_closed_form = 0.0;
  double ground_energy = 0.0;
  double ground_closed_form = 0.0;
  int max_levels = 0;               ///< largest one-mode truncation used
};

struct VanHoveOptions {
  int block = 4;            ///< bosons per mode in the compared block
  int extra_levels = 20;    ///< one-mode truncation beyond block + 8|alpha|^2
  double conjugation_tolerance = 1e-7;
  double parity_ratio = 0.05;
  double energy_drop = 2.0;
  int jobs = 1;
};

struct VanHoveReport {
  cplx eigenvalue;           ///< b with V(k) psi = v(k) b psi
  std::vector<VanHoveRow> rows;
  bool conjugation_ok = false;
  bool parity_decreasing = false;
  double parity_ratio = 0.0;  ///< final / initial
  double energy_drop = 0.0;   ///< first - last ground energy
  bool parity_ok = false;
  bool divergence_ok = false;
  bool pass() const { return conjugation_ok && parity_ok && divergence_ok; }
};

/// Van Hove divergence demo for a normal coupling V restricted to the spin
/// eigenvector psi (V(k) psi must be a multiple of psi for every mode).
///
/// On ran P_psi the operator dGamma(omega) + phi(V_Lambda) is a sum of
/// independent one-mode problems, which are solved exactly per mode. Each
/// row reports (i) sum_i ||W_i^*(h_i + c_i)W_i - omega_i N_i|| on the
/// compressions to at most `block` bosons per mode, an upper bound for the
/// resolvent distance on the product block, (ii) the parity expectation of
/// the dressed vacuum and (iii) the ground energy of the uncorrected
/// operator, each next to its closed form.
VanHoveReport vanhove_demo(const FormFactor& v, const Vector& psi, const std::vector<double>& schedule,
                           const VanHoveOptions& opts = {});

/// Power-law family v(k) = k^{-beta} B on modes above kappa, psi the
/// eigenvector of the normal matrix B with largest |eigenvalue|.
VanHoveReport vanhove_demo(double beta, double kappa, double lambda_max, int n_modes, const SpinMatrix& b,
                           const std::vector<double>& schedule, const VanHoveOptions& opts = {});

/// Eigenvector of a normal matrix for its eigenvalue of largest modulus.
Vector dominant_eigenvector(const SpinMatrix& b);

struct AppendixReport {
  int dim = 0;
  double adjoint_deviation = 0.0;        ///< (A C A^*)^* vs A C^* A^*
  double resolvent_deviation = 0.0;      ///< transformed resolvent identity
  double resolvent_literal_deviation = 0.0;  ///< same with (T A^* (A T A^* + i)^{-1})^* in the second term
  double condition_a = 0.0;
  double condition_b = 0.0;
  double tolerance = 1e-9;
  bool pass() const { return adjoint_deviation <= tolerance && resolvent_deviation <= tolerance; }
};

/// Random A, B (condition number <= 1e3), C and self-adjoint T of size dim.
AppendixReport verify_transformed_operator_identities(int dim, std::uint64_t seed);

/// Deviations of both identities for given matrices.
AppendixReport transformed_identity_deviation(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& c,
                                              const DenseMatrix& t);

}  // namespace sbren::renorm
