#pragma once

// Generalized Weyl operators W(F) = exp(a(F) - a^dagger(F)) and checks of
// their transformation and continuity laws on truncation-safe blocks.

#include <cstdint>
#include <string>

#include "sbren/fock.hpp"
#include "sbren/model.hpp"
#include "sbren/operator.hpp"

namespace sbren::dressing {

/// Dense matrix exponential of a(F) - a^dagger(F). The generator is exactly
/// skew-adjoint on the truncated space, so the result is unitary to rounding.
/// Requires basis size <= kDenseLimit.
Operator weyl_operator(const BasisPtr& basis, const FormFactor& f);

/// W H W^*.
Operator conjugate(const Operator& h, const Operator& w);

/// Largest violation of the pointwise commutation hypotheses
/// [F,G] = [F,G^*] = [F,F] = [F,F^*] = 0 over all mode pairs.
double commutation_defect(const FormFactor& f, const FormFactor& g);

inline constexpr double kHypothesisTolerance = 1e-12;

/// Leak tolerance of weyl_safe_block. Measured deviations of the
/// transformation laws stay below about 1.5 leak^2.
inline constexpr double kLeakTolerance = 1e-4;

/// max over states j with at most m bosons of ||P_top W e_j||, where P_top
/// projects onto the top boson sector. Small leakage means the truncated
/// exponential has not yet felt the boundary on that block.
double top_sector_leak(const BasisPtr& basis, const Operator& w, int m);

/// Largest m with top_sector_leak(basis, w, m) <= leak, or -1 if even the
/// vacuum block leaks more.
int weyl_safe_block(const BasisPtr& basis, const Operator& w, double leak = kLeakTolerance);

struct TransformReport {
  bool skipped = false;
  std::string reason;
  int block = 0;                 ///< max boson number of the compared block
  double leak = 0.0;             ///< top_sector_leak of W(F) on that block
  double field_deviation = 0.0;  ///< W phi(G) W^* vs phi(G) + <F,G>_{b_0} + <G,F>_{b_0}
  double energy_deviation = 0.0; ///< W dGamma W^* vs dGamma + phi(omega F) + <F,F>_{b_-1}
  double tolerance = 1e-7;
  bool pass() const { return skipped || (field_deviation <= tolerance && energy_deviation <= tolerance); }
};

/// Compares both sides of the transformation laws on the block with at most
/// `block` bosons (default weyl_safe_block of W(F)). Throws ParameterError
/// when no block is safe, asking for a larger n_max.
TransformReport verify_transforms(const BasisPtr& basis, const FormFactor& f, const FormFactor& g, int block = -1,
                                  double tolerance = 1e-7);

struct ContinuityReport {
  bool skipped = false;
  std::string reason;
  int samples = 0;
  double vector_ratio = 0.0;  ///< max ||(W(F)-W(G))psi|| / (||phi(iH)psi|| + 1/2 ||(<F,iH> + <iH,F>)psi||), H = F-G
  /// Same with phi(H) and <F,H> + <H,F>, which is not a bound for complex
  /// fields in general. Informational.
  double vector_ratio_literal = 0.0;
  double theta0_ratio = 0.0;  ///< ||W(F) - W(G)|| / 2
  double theta1_ratio = 0.0;  ///< ||(W(F)-W(G))(1+dGamma)^{-1/2} P|| / (4 max(b_0, b_1) + 1/2 ||...||)
  bool pass() const;
};

/// Evaluates the Weyl continuity estimate on random vectors supported on at
/// most `block` bosons (default: safe for both W(F) and W(G)) and its
/// operator-norm form for theta in {0, 1}.
ContinuityReport verify_continuity(const BasisPtr& basis, const FormFactor& f, const FormFactor& g, int samples = 100,
                                   std::uint64_t seed = 7, int block = -1);

}  // namespace sbren::dressing
