#pragma once

// Interior-boundary-condition operators for 2-nilpotent couplings.
//
//   diagonal_part   sum_i mu_i F_i^* [(dGamma + omega_i + lambda)^{-1} - omega_i^{-1}] F_i
//   exchange_part   sum_{q,r} sqrt(mu_q mu_r) a_q^dagger F_r^* (dGamma + omega_r + omega_q + lambda)^{-1} F_q a_r
//   boundary        diagonal_part + exchange_part
//   G               a(F) (dGamma + lambda)^{-1}
//   Xi(F, V)        (1 + G_F) (dGamma + lambda - T_V) (1 + G_F^*)
//
// The sign of the diagonal part is the one for which
//   T_F = a(F) (dGamma + lambda)^{-1} a^dagger(F) - <F, F>_{b_1}
// holds exactly. In the exchange part the free energy is evaluated between
// the two ladder operators, i.e. on the state left after a_r.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sbren/fock.hpp"
#include "sbren/model.hpp"
#include "sbren/operator.hpp"

namespace sbren::ibc {

Operator diagonal_part(const BasisPtr& basis, const FormFactor& f, double lambda);
Operator exchange_part(const BasisPtr& basis, const FormFactor& f, double lambda);
Operator boundary_operator(const BasisPtr& basis, const FormFactor& f, double lambda);
Operator resolvent_annihilator(const BasisPtr& basis, const FormFactor& f, double lambda);

/// (1 - G, 1 - G^*), the inverses of 1 + G and 1 + G^* for 2-nilpotent F.
/// Throws StructuralError when F violates nilpotency by more than `tol`.
std::pair<Operator, Operator> nilpotent_inverse(const BasisPtr& basis, const FormFactor& f, double lambda,
                                                double tol = 1e-12);

Operator ibc_hamiltonian(const BasisPtr& basis, const FormFactor& f, const FormFactor& v, double lambda);

/// Which argument guarantees that 1 + G_{F,lambda} is boundedly invertible.
struct InversionGate {
  std::string route;   ///< "nilpotent", "neumann" or "none"
  double neumann_bound = 0.0;  ///< ||F||_{b_s} lambda^{(s-2)/2}
  bool ok() const { return route != "none"; }
};
InversionGate inversion_gate(const FormFactor& f, double lambda, double s);

struct BoundCheck {
  std::string name;
  double max_ratio = 0.0;  ///< max over samples of LHS / RHS
  int samples = 0;
  bool informational = false;  ///< reported but not part of the verdict
  bool pass = true;
};

struct BoundReport {
  std::vector<BoundCheck> checks;
  bool pass() const;
  const BoundCheck* find(const std::string& name) const;
};

inline constexpr double kBoundSlack = 1e-9;

struct BoundOptions {
  int samples = 100;
  std::uint64_t seed = 1;
};

/// Evaluates the relative bounds for the field, the boundary operator parts
/// (F_1 = f, F_2 = v), the resolvent annihilator and its weighted adjoint on
/// random vectors. Two further domain estimates are evaluated when f is
/// 2-nilpotent and supported above kappa; they are informational.
BoundReport verify_bounds(const BasisPtr& basis, const FormFactor& f, const FormFactor& v, double lambda, double s,
                          const BoundOptions& opts = {});

}  // namespace sbren::ibc
