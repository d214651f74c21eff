#include "sbren/fock.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sbren/errors.hpp"

namespace sbren {

namespace {

using Triplet = Eigen::Triplet<cplx>;

std::string key_of(std::span<const std::uint8_t> occ) {
  return {reinterpret_cast<const char*>(occ.data()), occ.size()};
}

// Appends every occupation vector of total `remaining` over positions
// [pos, modes) in ascending lexicographic order.
void enumerate(std::vector<std::uint8_t>& current, std::size_t pos, int remaining,
               std::vector<std::uint8_t>& out) {
  const std::size_t modes = current.size();
  if (pos + 1 == modes) {
    current[pos] = static_cast<std::uint8_t>(remaining);
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (int v = 0; v <= remaining; ++v) {
    current[pos] = static_cast<std::uint8_t>(v);
    enumerate(current, pos + 1, remaining - v, out);
  }
  current[pos] = 0;
}

Operator diagonal(const BasisPtr& basis, const std::function<cplx(std::size_t config, int spin)>& value) {
  std::vector<Triplet> t;
  t.reserve(basis->size());
  for (std::size_t c = 0; c < basis->configs(); ++c)
    for (int s = 0; s < basis->spin_dim(); ++s) {
      const cplx v = value(c, s);
      if (v != cplx(0.0)) {
        const auto i = static_cast<Eigen::Index>(basis->index(c, s));
        t.emplace_back(i, i, v);
      }
    }
  const auto n = static_cast<Eigen::Index>(basis->size());
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return {basis, std::move(m)};
}

void require_grid(const BasisPtr& basis, const FormFactor& f) {
  if (basis->grid() != f.grid() && !(*basis->grid() == *f.grid())) {
    throw StructuralError("form factor grid does not match the basis grid");
  }
  if (f.spin_dim() != basis->spin_dim()) throw StructuralError("form factor spin dimension does not match the basis");
}

}  // namespace

std::size_t occupation_count(std::size_t modes, int n) {
  if (n < 0) return 0;
  if (modes == 0) return n == 0 ? 1 : 0;
  // C(modes + n - 1, n) with saturation.
  long double acc = 1.0L;
  for (int k = 1; k <= n; ++k) {
    acc = acc * static_cast<long double>(modes - 1 + static_cast<std::size_t>(k)) / k;
    if (acc > static_cast<long double>(std::numeric_limits<std::size_t>::max() / 4)) {
      return std::numeric_limits<std::size_t>::max() / 4;
    }
  }
  return static_cast<std::size_t>(std::llround(acc));
}

BasisPtr OccupationBasis::build(GridPtr grid, SpinSpace spin, int n_max, std::size_t cap) {
  if (!grid) throw StructuralError("basis: null grid");
  if (n_max < 0) throw ParameterError("basis: n_max must be non-negative");
  if (n_max > 255) throw ParameterError("basis: n_max above 255 is not supported");

  const std::size_t modes = grid->size();
  std::size_t configs = 0;
  for (int n = 0; n <= n_max; ++n) configs += occupation_count(modes, n);
  if (configs > cap / static_cast<std::size_t>(spin.dim)) {
    std::ostringstream os;
    os << "basis: " << configs << " occupations x spin dimension " << spin.dim << " exceeds the cap of " << cap
       << " states";
    throw ResourceError(os.str());
  }

  std::shared_ptr<OccupationBasis> b(new OccupationBasis());
  b->grid_ = std::move(grid);
  b->spin_dim_ = spin.dim;
  b->n_max_ = n_max;
  b->configs_ = configs;
  b->occ_.reserve(configs * modes);
  std::vector<std::uint8_t> current(modes, 0);
  for (int n = 0; n <= n_max; ++n) {
    enumerate(current, 0, n, b->occ_);
    b->sector_end_.push_back(b->occ_.size() / modes);
  }
  b->totals_.resize(configs);
  b->energies_.resize(configs);
  b->lookup_.reserve(configs);
  const std::vector<double> w = b->grid_->omegas();
  for (std::size_t c = 0; c < configs; ++c) {
    const auto occ = b->occupation(c);
    int tot = 0;
    double e = 0.0;
    for (std::size_t i = 0; i < modes; ++i) {
      tot += occ[i];
      e += occ[i] * w[i];
    }
    b->totals_[c] = tot;
    b->energies_[c] = e;
    b->lookup_.emplace(key_of(occ), c);
  }
  return b;
}

std::span<const std::uint8_t> OccupationBasis::occupation(std::size_t config) const {
  return {occ_.data() + config * modes(), modes()};
}

std::size_t OccupationBasis::find(std::span<const std::uint8_t> occ) const {
  auto it = lookup_.find(key_of(occ));
  return it == lookup_.end() ? npos : it->second;
}

std::size_t OccupationBasis::shifted(std::size_t config, std::size_t mode, int delta) const {
  const auto occ = occupation(config);
  const int n = occ[mode] + delta;
  if (n < 0) return npos;
  if (totals_[config] + delta > n_max_) return npos;
  std::string key = key_of(occ);
  key[mode] = static_cast<char>(static_cast<std::uint8_t>(n));
  auto it = lookup_.find(key);
  return it == lookup_.end() ? npos : it->second;
}

std::size_t OccupationBasis::states_up_to(int m) const {
  if (m < 0) return 0;
  if (m >= n_max_) return size();
  return sector_end_[static_cast<std::size_t>(m)] * static_cast<std::size_t>(spin_dim_);
}

Operator second_quantize(const BasisPtr& basis, std::span<const double> weights) {
  if (weights.size() != basis->modes()) throw StructuralError("second_quantize: weights length must equal mode count");
  return diagonal(basis, [&](std::size_t c, int) {
    const auto occ = basis->occupation(c);
    double e = 0.0;
    for (std::size_t i = 0; i < occ.size(); ++i) e += occ[i] * weights[i];
    return cplx(e);
  });
}

Operator free_energy(const BasisPtr& basis) {
  return diagonal(basis, [&](std::size_t c, int) { return cplx(basis->energy(c)); });
}

Operator number_operator(const BasisPtr& basis) {
  return diagonal(basis, [&](std::size_t c, int) { return cplx(basis->total(c)); });
}

Operator parity(const BasisPtr& basis) {
  return diagonal(basis, [&](std::size_t c, int) { return cplx(basis->total(c) % 2 == 0 ? 1.0 : -1.0); });
}

Operator annihilate(const BasisPtr& basis, const FormFactor& f) {
  require_grid(basis, f);
  const ModeGrid& grid = *basis->grid();
  const int d = basis->spin_dim();
  std::vector<SpinMatrix> adj(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) adj[i] = std::sqrt(grid.mu(i)) * f[i].adjoint();

  std::vector<Triplet> t;
  for (std::size_t c = 0; c < basis->configs(); ++c) {
    const auto occ = basis->occupation(c);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (occ[i] == 0 || adj[i].isZero(0.0)) continue;
      const std::size_t lower = basis->shifted(c, i, -1);
      const double amp = std::sqrt(static_cast<double>(occ[i]));
      for (int s = 0; s < d; ++s)
        for (int sp = 0; sp < d; ++sp) {
          const cplx v = adj[i](sp, s);
          if (v == cplx(0.0)) continue;
          t.emplace_back(static_cast<Eigen::Index>(basis->index(lower, sp)),
                         static_cast<Eigen::Index>(basis->index(c, s)), amp * v);
        }
    }
  }
  const auto n = static_cast<Eigen::Index>(basis->size());
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return {basis, std::move(m)};
}

Operator create(const BasisPtr& basis, const FormFactor& f) { return annihilate(basis, f).adjoint(); }

Operator field(const BasisPtr& basis, const FormFactor& f) {
  const Operator a = annihilate(basis, f);
  return a + a.adjoint();
}

Operator function_of_energy(const BasisPtr& basis, const std::function<double(double)>& g) {
  return diagonal(basis, [&](std::size_t c, int) {
    const double v = g(basis->energy(c));
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "function_of_energy: function is not finite at eigenvalue " << basis->energy(c);
      throw NumericError(os.str());
    }
    return cplx(v);
  });
}

Operator sector_projector(const BasisPtr& basis, int m) {
  if (m < 0 || m > basis->n_max()) throw ParameterError("sector_projector: m must lie in [0, n_max]");
  return diagonal(basis, [&](std::size_t c, int) { return cplx(basis->total(c) <= m ? 1.0 : 0.0); });
}

Operator spin_operator(const BasisPtr& basis, const SpinMatrix& s) {
  const int d = basis->spin_dim();
  if (s.rows() != d || s.cols() != d) throw StructuralError("spin_operator: matrix dimension does not match the basis");
  std::vector<Triplet> t;
  t.reserve(basis->configs() * static_cast<std::size_t>(d));
  for (std::size_t c = 0; c < basis->configs(); ++c)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        if (s(a, b) != cplx(0.0))
          t.emplace_back(static_cast<Eigen::Index>(basis->index(c, a)), static_cast<Eigen::Index>(basis->index(c, b)),
                         s(a, b));
  const auto n = static_cast<Eigen::Index>(basis->size());
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return {basis, std::move(m)};
}

}  // namespace sbren
