#include "sbren/ibc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sbren/errors.hpp"
#include "sbren/linalg.hpp"

namespace sbren::ibc {

namespace {

using Triplet = Eigen::Triplet<cplx>;

void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("ibc: lambda must be positive and finite");
}

Operator from_triplets(const BasisPtr& basis, std::vector<Triplet>& t) {
  const auto n = static_cast<Eigen::Index>(basis->size());
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return {basis, SparseMatrix(m.pruned(0.0, 0.0))};
}

double ratio(double lhs, double rhs) {
  if (lhs == 0.0) return 0.0;
  if (rhs == 0.0) return std::numeric_limits<double>::infinity();
  return lhs / rhs;
}

// Columns are random vectors; rows above `max_bosons` are zeroed.
DenseMatrix sample_vectors(const BasisPtr& basis, int count, std::uint64_t seed, int max_bosons) {
  DenseMatrix x = random_matrix(static_cast<Eigen::Index>(basis->size()), count, seed);
  const auto keep = static_cast<Eigen::Index>(basis->states_up_to(max_bosons));
  x.bottomRows(x.rows() - keep).setZero();
  return x;
}

Eigen::ArrayXd column_norms(const DenseMatrix& m) { return m.colwise().norm().transpose().array(); }

DenseMatrix times(const Operator& a, const DenseMatrix& x) {
  return a.is_dense() ? DenseMatrix(a.dense_ref() * x) : DenseMatrix(a.sparse_ref() * x);
}

BoundCheck max_ratio_check(std::string name, const Eigen::ArrayXd& lhs, const Eigen::ArrayXd& rhs,
                           bool informational = false) {
  BoundCheck c;
  c.name = std::move(name);
  c.samples = static_cast<int>(lhs.size());
  c.informational = informational;
  for (Eigen::Index i = 0; i < lhs.size(); ++i) c.max_ratio = std::max(c.max_ratio, ratio(lhs(i), rhs(i)));
  c.pass = c.max_ratio <= 1.0 + kBoundSlack;
  return c;
}

}  // namespace

Operator diagonal_part(const BasisPtr& basis, const FormFactor& f, double lambda) {
  require_lambda(lambda);
  const ModeGrid& grid = *basis->grid();
  const int d = basis->spin_dim();
  if (f.spin_dim() != d || f.size() != grid.size()) throw StructuralError("diagonal_part: form factor does not match basis");
  std::vector<SpinMatrix> ff(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) ff[i] = grid.mu(i) * (f[i].adjoint() * f[i]);

  std::vector<Triplet> t;
  t.reserve(basis->configs() * static_cast<std::size_t>(d * d));
  for (std::size_t c = 0; c < basis->configs(); ++c) {
    const double e = basis->energy(c);
    SpinMatrix blk = SpinMatrix::Zero(d, d);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double w = grid.omega(i);
      blk += (1.0 / (e + w + lambda) - 1.0 / w) * ff[i];
    }
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        if (blk(a, b) != cplx(0.0))
          t.emplace_back(static_cast<Eigen::Index>(basis->index(c, a)), static_cast<Eigen::Index>(basis->index(c, b)),
                         blk(a, b));
  }
  return from_triplets(basis, t);
}

Operator exchange_part(const BasisPtr& basis, const FormFactor& f, double lambda) {
  require_lambda(lambda);
  const ModeGrid& grid = *basis->grid();
  const std::size_t m = grid.size();
  const int d = basis->spin_dim();
  if (f.spin_dim() != d || f.size() != m) throw StructuralError("exchange_part: form factor does not match basis");

  // pair[r * m + q] = sqrt(mu_q mu_r) F_r^* F_q
  std::vector<SpinMatrix> pair(m * m);
  std::vector<char> nonzero(m * m, 0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t q = 0; q < m; ++q) {
      pair[r * m + q] = std::sqrt(grid.mu(q) * grid.mu(r)) * (f[r].adjoint() * f[q]);
      nonzero[r * m + q] = pair[r * m + q].isZero(0.0) ? 0 : 1;
    }

  std::vector<Triplet> t;
  for (std::size_t c = 0; c < basis->configs(); ++c) {
    const auto occ = basis->occupation(c);
    for (std::size_t r = 0; r < m; ++r) {
      if (occ[r] == 0) continue;
      const std::size_t mid = basis->shifted(c, r, -1);
      const double e_mid = basis->energy(mid);
      const auto mid_occ = basis->occupation(mid);
      const double amp_r = std::sqrt(static_cast<double>(occ[r]));
      for (std::size_t q = 0; q < m; ++q) {
        if (!nonzero[r * m + q]) continue;
        const std::size_t out = basis->shifted(mid, q, +1);
        if (out == OccupationBasis::npos) continue;
        const double amp = amp_r * std::sqrt(static_cast<double>(mid_occ[q]) + 1.0) /
                           (e_mid + grid.omega(r) + grid.omega(q) + lambda);
        const SpinMatrix& s = pair[r * m + q];
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            if (s(a, b) != cplx(0.0))
              t.emplace_back(static_cast<Eigen::Index>(basis->index(out, a)),
                             static_cast<Eigen::Index>(basis->index(c, b)), amp * s(a, b));
      }
    }
  }
  return from_triplets(basis, t);
}

Operator boundary_operator(const BasisPtr& basis, const FormFactor& f, double lambda) {
  return diagonal_part(basis, f, lambda) + exchange_part(basis, f, lambda);
}

Operator resolvent_annihilator(const BasisPtr& basis, const FormFactor& f, double lambda) {
  require_lambda(lambda);
  return annihilate(basis, f) * function_of_energy(basis, [lambda](double e) { return 1.0 / (e + lambda); });
}

std::pair<Operator, Operator> nilpotent_inverse(const BasisPtr& basis, const FormFactor& f, double lambda,
                                                double tol) {
  const double viol = nilpotency_violation(f);
  if (viol > tol) {
    std::ostringstream os;
    os << "nilpotent_inverse: form factor is not 2-nilpotent (max |F(k)F(p)| = " << viol << ")";
    throw StructuralError(os.str());
  }
  const Operator g = resolvent_annihilator(basis, f, lambda);
  const Operator id = Operator::identity(basis);
  return {id - g, id - g.adjoint()};
}

Operator ibc_hamiltonian(const BasisPtr& basis, const FormFactor& f, const FormFactor& v, double lambda) {
  require_lambda(lambda);
  const Operator id = Operator::identity(basis);
  const Operator g = resolvent_annihilator(basis, f, lambda);
  const Operator core = free_energy(basis) + id * cplx(lambda) - boundary_operator(basis, v, lambda);
  return (id + g) * core * (id + g.adjoint());
}

InversionGate inversion_gate(const FormFactor& f, double lambda, double s) {
  require_lambda(lambda);
  InversionGate gate;
  gate.neumann_bound = weighted_norm(f, s) * std::pow(lambda, 0.5 * (s - 2.0));
  if (nilpotency_violation(f) <= 1e-12)
    gate.route = "nilpotent";
  else if (gate.neumann_bound < 1.0)
    gate.route = "neumann";
  else
    gate.route = "none";
  return gate;
}

bool BoundReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.informational || c.pass; });
}

const BoundCheck* BoundReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

BoundReport verify_bounds(const BasisPtr& basis, const FormFactor& f, const FormFactor& v, double lambda, double s,
                          const BoundOptions& opts) {
  require_lambda(lambda);
  if (s < 1.0 || s > 2.0) throw ParameterError("verify_bounds: s must lie in [1, 2]");
  f.require_compatible(v);
  BoundReport rep;
  const int n = std::max(1, opts.samples);
  const DenseMatrix psi = sample_vectors(basis, n, opts.seed, basis->n_max());

  auto energy_power = [&](double shift, double p) {
    return function_of_energy(basis, [shift, p](double e) { return std::pow(e + shift, p); });
  };

  // Field relative to the square root of the free energy.
  {
    const double c = 2.0 * weighted_norm(f.map_omega([](double w) { return 1.0 + std::pow(w, -0.5); }), 0.0);
    const Eigen::ArrayXd lhs = column_norms(times(field(basis, f), psi));
    const Eigen::ArrayXd rhs = c * column_norms(times(energy_power(1.0, 0.5), psi));
    rep.checks.push_back(max_ratio_check("field_relative", lhs, rhs));
  }

  // Differences of the two boundary operator parts.
  {
    const double c = (weighted_norm(f, s) + weighted_norm(v, s)) * weighted_norm(f - v, s);
    const Eigen::ArrayXd rhs = c * column_norms(times(energy_power(lambda, s - 1.0), psi));
    const Operator d0 = diagonal_part(basis, f, lambda) - diagonal_part(basis, v, lambda);
    const Operator d1 = exchange_part(basis, f, lambda) - exchange_part(basis, v, lambda);
    rep.checks.push_back(max_ratio_check("diagonal_part_difference", column_norms(times(d0, psi)), rhs));
    rep.checks.push_back(max_ratio_check("exchange_part_difference", column_norms(times(d1, psi)), rhs));
  }

  const Operator g = resolvent_annihilator(basis, f, lambda);
  const double fs = weighted_norm(f, s);
  // Norm of the resolvent annihilator.
  {
    BoundCheck c;
    c.name = "resolvent_annihilator_norm";
    c.samples = 1;
    c.max_ratio = ratio(operator_norm(g), fs * std::pow(lambda, 0.5 * (s - 2.0)));
    c.pass = c.max_ratio <= 1.0 + kBoundSlack;
    rep.checks.push_back(c);
  }

  // Weighted adjoint for r in {1 - s/2, 0, -1/2}.
  {
    const Operator gadj = g.adjoint();
    const double c = fs * std::pow(lambda, 0.5 * s - 1.0);
    BoundCheck agg;
    agg.name = "weighted_adjoint";
    for (double r : {1.0 - 0.5 * s, 0.0, -0.5}) {
      const Operator wr = energy_power(lambda, r);
      const Eigen::ArrayXd lhs = column_norms(times(wr, times(gadj, psi)));
      const Eigen::ArrayXd rhs = c * column_norms(times(wr, psi));
      const BoundCheck one = max_ratio_check("weighted_adjoint", lhs, rhs);
      agg.max_ratio = std::max(agg.max_ratio, one.max_ratio);
      agg.samples += one.samples;
    }
    agg.pass = agg.max_ratio <= 1.0 + kBoundSlack;
    rep.checks.push_back(agg);
  }

  // Domain estimates for nilpotent F supported above kappa.
  const FormFactor f_le = split_infrared(f, basis->grid()->kappa()).first;
  if (nilpotency_violation(f) <= 1e-12 && f_le.is_zero() && basis->n_max() >= 2) {
    const DenseMatrix phi = sample_vectors(basis, n, opts.seed + 1, basis->n_max() - 2);
    const Operator xi = ibc_hamiltonian(basis, f, v, lambda);
    const Eigen::ArrayXd xi_norm = column_norms(times(xi, phi));
    const Operator tr = boundary_operator(basis, v, lambda) * energy_power(lambda, -1.0);
    const double tr_norm = operator_norm(tr);
    const double g_norm = operator_norm(g);

    std::vector<double> w_le(basis->modes());
    for (std::size_t i = 0; i < w_le.size(); ++i)
      w_le[i] = basis->grid()->infrared(i) ? basis->grid()->omega(i) : 0.0;
    const Eigen::ArrayXd lhs_ir = column_norms(times(second_quantize(basis, w_le), phi));
    const double c_ir = (1.0 + g_norm) * (1.0 + g_norm) * (1.0 + tr_norm);
    rep.checks.push_back(max_ratio_check("domain_infrared", lhs_ir, c_ir * xi_norm, true));

    const Eigen::ArrayXd lhs_fr = column_norms(times(energy_power(0.0, 1.0 - 0.5 * s), phi));
    const double b = 1.0 + fs * std::pow(lambda, 0.5 * s - 1.0);
    rep.checks.push_back(max_ratio_check("domain_fractional", lhs_fr, b * b * (1.0 + tr_norm) * xi_norm, true));
  }
  return rep;
}

}  // namespace sbren::ibc
