#pragma once

// Resolvents, operator norms and ground energies of operators on truncated
// spin x Fock spaces.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "sbren/operator.hpp"

namespace sbren {

/// Largest dimension handled by plain dense factorizations.
inline constexpr Eigen::Index kDenseLimit = 4096;

/// Matrix-free view of a square linear map and its adjoint.
struct LinearMap {
  Eigen::Index dim = 0;
  std::function<DenseMatrix(const DenseMatrix&)> apply;
  std::function<DenseMatrix(const DenseMatrix&)> apply_adjoint;

  static LinearMap of(const Operator& a);
  static LinearMap of(const DenseMatrix& a);
  /// x -> f(x) - g(x)
  friend LinearMap operator-(const LinearMap& f, const LinearMap& g);
};

struct NormOptions {
  double rel_tol = 1e-8;
  int max_iterations = 3000;
  int block_size = 4;
  int max_basis_blocks = 24;  ///< Krylov blocks kept before a thick restart
  std::uint64_t seed = 0x5eed5eedULL;
};

struct NormEstimate {
  double value = 0.0;
  double error_estimate = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value by block power iteration on A^*A in which all
/// iterates are kept (a block Krylov space) and the value is extracted by
/// Rayleigh-Ritz on that space. Stops when the Aitken-extrapolated change of
/// the estimate falls below rel_tol. Deterministic for a fixed seed.
NormEstimate estimate_norm(const LinearMap& a, const NormOptions& opts = {});

/// Same as estimate_norm but throws NumericError carrying the best estimate
/// when the iteration does not reach the tolerance.
double operator_norm(const LinearMap& a, const NormOptions& opts = {});
double operator_norm(const Operator& a, const NormOptions& opts = {});

/// Direct solver for (H - z) x = b.
///
/// The matrix is split into the connected components of its sparsity graph.
/// Components of at most 256 states are inverted directly, components up to
/// kDenseLimit are LU factorized densely. Larger components are reduced by
/// eliminating the states of maximal boson number, which couple to each
/// other only through small spin blocks for every operator of the form
/// S + dGamma(omega) + phi(V) + const; the Schur complement on the remaining
/// states is factorized densely. ResourceError is thrown if that complement
/// still exceeds the dense limit.
class ResolventSolver {
 public:
  ResolventSolver(const Operator& h, cplx z, Eigen::Index dense_limit = kDenseLimit);
  ~ResolventSolver();
  ResolventSolver(ResolventSolver&&) noexcept;
  ResolventSolver& operator=(ResolventSolver&&) noexcept;

  Eigen::Index dim() const noexcept { return dim_; }
  cplx shift() const noexcept { return z_; }

  /// (H - z)^{-1} B, column by column.
  DenseMatrix solve(const DenseMatrix& b) const;
  /// ((H - z)^{-1})^* B = (H - conj(z))^{-1} B.
  DenseMatrix solve_adjoint(const DenseMatrix& b) const;

  LinearMap as_map() const;

  /// Number of independent pieces (dense factorizations plus eliminated
  /// blocks) and the size of the largest dense factorization.
  std::size_t components() const;
  Eigen::Index largest_factorization() const;

 private:
  struct Component;
  DenseMatrix solve_impl(const DenseMatrix& b, bool adjoint) const;

  Eigen::Index dim_ = 0;
  cplx z_;
  std::vector<std::unique_ptr<Component>> comps_;
  std::size_t n_blocks_ = 0;
  SparseMatrix dinv_, b_, c_;
  SparseMatrix dinv_adj_, b_adj_, c_adj_;
};

/// Dense (H - z)^{-1}. Requires dim <= kDenseLimit. The residual
/// max|(H - z) R - Id| is checked against `residual_tol`; a larger residual
/// raises NumericError.
Operator resolvent(const Operator& h, cplx z, double residual_tol = 1e-10);

/// Smallest eigenvalue of a self-adjoint operator. Dense symmetric
/// eigensolver up to kDenseLimit, restarted Lanczos with full
/// reorthogonalization above. Throws StructuralError if H deviates from its
/// adjoint by more than `hermiticity_tol`.
double ground_energy(const Operator& h, double hermiticity_tol = 1e-10);

struct LanczosOptions {
  int krylov_size = 40;
  int max_restarts = 60;
  double tol = 1e-10;
  std::uint64_t seed = 0x1a2c705ULL;
};

/// Lowest eigenpair of a Hermitian matrix-free operator. Converged when the
/// Ritz residual, or the Kato-Temple bound residual^2 / gap on the eigenvalue
/// error, drops below tol * max(1, |theta|).
std::pair<double, Vector> lanczos_ground(const std::function<Vector(const Vector&)>& apply, Eigen::Index dim,
                                         const LanczosOptions& opts = {});

/// Deterministic complex Gaussian matrix from a 64-bit seed.
DenseMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to per-index slots so the outcome is independent of scheduling.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace sbren
