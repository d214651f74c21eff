#pragma once

// Truncated spin x Fock space in the occupation-number representation and
// the elementary second-quantized operators on it.
//
// Discrete modes are orthonormalized: the per-mode ladder operators satisfy
// [a_i, a_j^dagger] = delta_ij and every dependence on the quadrature weights
// lives in the sqrt(mu_i) prefactors of a(F) and a^dagger(F). Creation beyond
// the maximal boson number is dropped, so identities involving creation hold
// exactly only on sectors a safe distance below n_max.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sbren/model.hpp"
#include "sbren/operator.hpp"

namespace sbren {

inline constexpr std::size_t kDefaultBasisCap = 4'000'000;

class OccupationBasis : public std::enable_shared_from_this<OccupationBasis> {
 public:
  /// States are ordered by total boson number, then lexicographically by
  /// occupation vector, then by spin index.
  static BasisPtr build(GridPtr grid, SpinSpace spin, int n_max, std::size_t cap = kDefaultBasisCap);

  const GridPtr& grid() const noexcept { return grid_; }
  int spin_dim() const noexcept { return spin_dim_; }
  int n_max() const noexcept { return n_max_; }
  std::size_t modes() const noexcept { return grid_->size(); }

  /// Number of (spin, occupation) states.
  std::size_t size() const noexcept { return configs_ * static_cast<std::size_t>(spin_dim_); }
  /// Number of occupation vectors.
  std::size_t configs() const noexcept { return configs_; }

  std::span<const std::uint8_t> occupation(std::size_t config) const;
  int total(std::size_t config) const { return totals_[config]; }
  double energy(std::size_t config) const { return energies_[config]; }

  std::size_t index(std::size_t config, int spin) const {
    return config * static_cast<std::size_t>(spin_dim_) + static_cast<std::size_t>(spin);
  }
  std::size_t config_of(std::size_t state) const { return state / static_cast<std::size_t>(spin_dim_); }
  int spin_of(std::size_t state) const { return static_cast<int>(state % static_cast<std::size_t>(spin_dim_)); }
  int total_of_state(std::size_t state) const { return totals_[config_of(state)]; }

  /// Index of the occupation vector `occ`, or npos when it lies outside the basis.
  std::size_t find(std::span<const std::uint8_t> occ) const;
  /// Config reached by adding (delta = +1) or removing (delta = -1) a boson in `mode`; npos if none.
  std::size_t shifted(std::size_t config, std::size_t mode, int delta) const;

  /// Number of states with total boson number <= m.
  std::size_t states_up_to(int m) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  OccupationBasis() = default;

  GridPtr grid_;
  int spin_dim_ = 1;
  int n_max_ = 0;
  std::size_t configs_ = 0;
  std::vector<std::uint8_t> occ_;   // configs_ x modes, row major
  std::vector<int> totals_;
  std::vector<double> energies_;    // sum_i n_i omega_i
  std::vector<std::size_t> sector_end_;  // configs with total <= n end here
  std::unordered_map<std::string, std::size_t> lookup_;
};

/// Number of occupation vectors over `modes` modes with total exactly n.
std::size_t occupation_count(std::size_t modes, int n);

/// dGamma(w): diagonal with eigenvalue sum_i n_i w_i.
Operator second_quantize(const BasisPtr& basis, std::span<const double> weights);
/// dGamma(omega) for the basis grid.
Operator free_energy(const BasisPtr& basis);
/// dGamma(1).
Operator number_operator(const BasisPtr& basis);
/// (-1)^{dGamma(1)}.
Operator parity(const BasisPtr& basis);

/// a(F) = sum_i sqrt(mu_i) F_i^* (x) a_i; antilinear in F.
Operator annihilate(const BasisPtr& basis, const FormFactor& f);
/// a^dagger(F) = a(F)^*.
Operator create(const BasisPtr& basis, const FormFactor& f);
/// phi(F) = a(F) + a^dagger(F).
Operator field(const BasisPtr& basis, const FormFactor& f);

/// g(dGamma(omega)), diagonal in the occupation basis. Throws NumericError if
/// g is not finite at an occurring eigenvalue.
Operator function_of_energy(const BasisPtr& basis, const std::function<double(double)>& g);

/// Orthogonal projector onto total boson number <= m.
Operator sector_projector(const BasisPtr& basis, int m);

/// S (x) Id.
Operator spin_operator(const BasisPtr& basis, const SpinMatrix& s);

}  // namespace sbren
