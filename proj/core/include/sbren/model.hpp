#pragma once

// Discretized boson momentum space, spin matrices and form factors.
//
// The boson measure space is replaced by a discrete measure: mode i carries a
// momentum label k_i, a dispersion value omega_i > 0 and a quadrature weight
// mu_i > 0. Every integral over momentum space becomes the weighted sum
// sum_i mu_i (...). Form factors are spin-matrix valued functions on the
// modes.

#include <complex>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sbren {

using cplx = std::complex<double>;
using SpinMatrix = Eigen::MatrixXcd;

struct Mode {
  double label = 0.0;
  double omega = 1.0;
  double mu = 1.0;
};

class ModeGrid {
 public:
  ModeGrid(std::vector<Mode> modes, double kappa);

  std::size_t size() const noexcept { return modes_.size(); }
  const Mode& operator[](std::size_t i) const { return modes_[i]; }
  double omega(std::size_t i) const { return modes_[i].omega; }
  double mu(std::size_t i) const { return modes_[i].mu; }
  double kappa() const noexcept { return kappa_; }
  const std::vector<Mode>& modes() const noexcept { return modes_; }
  std::vector<double> omegas() const;

  bool infrared(std::size_t i) const { return modes_[i].omega <= kappa_; }

  friend bool operator==(const ModeGrid& a, const ModeGrid& b);

 private:
  std::vector<Mode> modes_;
  double kappa_;
};

using GridPtr = std::shared_ptr<const ModeGrid>;

struct SpinSpace {
  explicit SpinSpace(int dim);
  int dim;
};

/// Standard spin matrices. `sigma_minus` maps the first basis vector to the
/// second, i.e. [[0,0],[1,0]].
namespace spin {
SpinMatrix sigma_x();
SpinMatrix sigma_y();
SpinMatrix sigma_z();
SpinMatrix sigma_minus();
SpinMatrix sigma_plus();
SpinMatrix identity(int n);
SpinMatrix zero(int n);
SpinMatrix kron(const SpinMatrix& a, const SpinMatrix& b);
SpinMatrix kron_power(const SpinMatrix& a, int k);
}  // namespace spin

/// Mode-indexed spin-matrix valued coupling F(k_i).
class FormFactor {
 public:
  FormFactor(GridPtr grid, std::vector<SpinMatrix> values);

  /// Zero form factor on `grid` with spin dimension `spin_dim`.
  static FormFactor zero(GridPtr grid, int spin_dim);
  /// Separable family F(k_i) = profile_i * B.
  static FormFactor separable(GridPtr grid, const std::vector<cplx>& profile, const SpinMatrix& b);
  static FormFactor separable(GridPtr grid, const std::vector<double>& profile, const SpinMatrix& b);

  const GridPtr& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  int spin_dim() const noexcept { return spin_dim_; }
  const SpinMatrix& operator[](std::size_t i) const { return values_[i]; }
  const std::vector<SpinMatrix>& values() const noexcept { return values_; }

  bool is_zero() const;
  /// Multiplies mode i by omega_i^p.
  FormFactor omega_power(double p) const;
  /// Multiplies mode i by the scalar g(omega_i).
  template <class Fn>
  FormFactor map_omega(Fn&& g) const {
    std::vector<SpinMatrix> out(values_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= g(grid_->omega(i));
    return {grid_, std::move(out)};
  }

  FormFactor operator+(const FormFactor& o) const;
  FormFactor operator-(const FormFactor& o) const;
  FormFactor operator*(cplx c) const;
  FormFactor operator-() const { return *this * cplx(-1.0); }

  /// Throws StructuralError unless `o` lives on the same grid with the same spin dimension.
  void require_compatible(const FormFactor& o) const;

 private:
  GridPtr grid_;
  std::vector<SpinMatrix> values_;
  int spin_dim_;
};

inline FormFactor operator*(cplx c, const FormFactor& f) { return f * c; }

/// V = V_le + V_D + V_N with s_N the b_s regularity index declared for V_N.
struct CouplingDecomposition {
  FormFactor v_le;
  FormFactor v_d;
  FormFactor v_n;
  double s_n = 2.0;

  FormFactor total() const { return v_le + v_d + v_n; }
  FormFactor ultraviolet() const { return v_d + v_n; }
};

/// <F, G>_{b_s} = sum_i mu_i omega_i^{-s} F_i^* G_i.
SpinMatrix weighted_inner(const FormFactor& f, const FormFactor& g, double s);

/// (sum_i mu_i omega_i^{-s} ||F_i||_op^2)^{1/2}.
double weighted_norm(const FormFactor& f, double s);

/// Spin operator norm (largest singular value).
double spin_opnorm(const SpinMatrix& m);

/// (F_le, F_gt): F_le keeps modes with omega <= kappa, F_gt those with omega > kappa.
std::pair<FormFactor, FormFactor> split_infrared(const FormFactor& f, double kappa);

/// Zeroes every mode with omega >= lambda.
FormFactor cutoff_ultraviolet(const FormFactor& f, double lambda);

/// <F_gt, F_gt>_{b_1} for the grid's infrared cutoff.
SpinMatrix renormalization_energy(const FormFactor& f);

struct StructureCheck {
  std::string name;
  double violation = 0.0;
  bool pass = true;
};

struct StructureReport {
  std::vector<StructureCheck> checks;
  double v_n_b2_norm = 0.0;
  bool admissible = true;      ///< s_N < 2 or ||V_N||_{b_2} < 1/2
  std::string admissibility_route;

  bool pass() const;
  bool structural_pass() const;  ///< every check except admissibility
  const StructureCheck* find(const std::string& name) const;
};

inline constexpr double kStructureTolerance = 1e-12;

StructureReport check_structure(const CouplingDecomposition& d, double tol = kStructureTolerance);

/// Max-entry size of the pairwise products F(k_i)F(k_j) over all mode pairs.
double nilpotency_violation(const FormFactor& f);
/// Max-entry size of [F(k_i), G(k_j)] over all mode pairs.
double commutator_violation(const FormFactor& f, const FormFactor& g);
/// Same as commutator_violation(f, g) with g replaced by its pointwise adjoint.
double adjoint_commutator_violation(const FormFactor& f, const FormFactor& g);

struct PowerLawGrid {
  GridPtr grid;
  std::vector<double> profile;  ///< v(k_i) = k_i^{-beta}
};

/// Log-uniform quadrature of [kappa/2, lambda_max] with omega(k) = k. The
/// infrared cutoff kappa is always a cell edge; nodes sit at geometric cell
/// midpoints and mu_i is the cell width.
PowerLawGrid power_law_grid(double beta, double kappa, double lambda_max, int n_modes);

}  // namespace sbren
