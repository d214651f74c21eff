#include "sbren/renorm.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "sbren/dressing.hpp"
#include "sbren/errors.hpp"
#include "sbren/ibc.hpp"

namespace sbren::renorm {

namespace {

constexpr double kHermitianTolerance = 1e-12;
const cplx kShift{0.0, -1.0};  // (H + i)^{-1} = (H - z)^{-1} with z = -i

void require_grid(const BasisPtr& basis, const FormFactor& f) {
  if (!(*basis->grid() == *f.grid())) throw StructuralError("form factor and basis live on different grids");
  if (basis->spin_dim() != f.spin_dim()) throw StructuralError("form factor and basis have different spin dimensions");
}

std::optional<Operator> dressing_factor(const BasisPtr& basis, const HamiltonianSpec& spec) {
  if (spec.coupling.v_d.is_zero()) return std::nullopt;
  return dressing::weyl_operator(basis, spec.coupling.v_d.omega_power(-1.0));
}

int default_block(const BasisPtr& basis, const std::optional<Operator>& w, int block) {
  if (block >= 0) return block;
  if (!w) return std::max(0, basis->n_max() - 2);
  const int m = dressing::weyl_safe_block(basis, *w);
  if (m < 0)
    throw ParameterError("the dressing factor leaks into the top boson sector even from the vacuum; raise n_max");
  return m;
}

Operator assemble(const BasisPtr& basis, const HamiltonianSpec& spec, const std::optional<Operator>& w) {
  const CouplingDecomposition& c = spec.coupling;
  Operator inner = ibc::ibc_hamiltonian(basis, c.v_n, c.v_n, spec.lambda) + field(basis, c.v_le);
  if (w) inner = dressing::conjugate(inner, *w);
  return spin_operator(basis, spec.s) + inner - Operator::identity(basis) * cplx(spec.lambda);
}

void require_valid(const BasisPtr& basis, const HamiltonianSpec& spec) {
  spec.validate();
  const CouplingDecomposition& c = spec.coupling;
  require_grid(basis, c.v_le);
  if (spec.s.rows() != basis->spin_dim()) throw StructuralError("S does not match the spin dimension");

  const StructureReport rep = check_structure(c);
  if (!rep.structural_pass()) {
    std::ostringstream os;
    os << "coupling structure check failed:";
    for (const auto& chk : rep.checks)
      if (!chk.pass) os << ' ' << chk.name << " (" << chk.violation << ")";
    throw StructuralError(os.str());
  }
  if (!rep.admissible) {
    std::ostringstream os;
    os << "V_N is not admissible: ||V_N||_{b_2} = " << rep.v_n_b2_norm
       << " >= 1/2 with s_N = " << c.s_n << "; enlarge kappa";
    throw ParameterError(os.str());
  }
}

bool covers_grid(const FormFactor& v, double cutoff) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v.grid()->omega(i) >= cutoff && v[i].cwiseAbs().maxCoeff() > 0.0) return false;
  return true;
}

Eigen::VectorXd block_spectrum(const Operator& h, int block) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.block(block), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace

void HamiltonianSpec::validate() const {
  if (s.rows() != s.cols()) throw StructuralError("S must be square");
  if (s.rows() != coupling.v_le.spin_dim())
    throw StructuralError("S and the coupling have different spin dimensions");
  coupling.v_le.require_compatible(coupling.v_d);
  coupling.v_le.require_compatible(coupling.v_n);
  const double defect = s.size() ? (s - s.adjoint()).cwiseAbs().maxCoeff() : 0.0;
  if (defect > kHermitianTolerance) {
    std::ostringstream os;
    os << "S is not self-adjoint (defect " << defect << ")";
    throw StructuralError(os.str());
  }
  if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
}

Operator h_reg(const BasisPtr& basis, const SpinMatrix& s, const FormFactor& v) {
  require_grid(basis, v);
  if (s.rows() != basis->spin_dim() || s.cols() != basis->spin_dim())
    throw StructuralError("h_reg: S does not match the spin dimension");
  return spin_operator(basis, s) + free_energy(basis) + field(basis, v);
}

Operator h_corrected(const BasisPtr& basis, const SpinMatrix& s, const FormFactor& v) {
  return h_reg(basis, s, v) + spin_operator(basis, renormalization_energy(v));
}

Operator h_renormalized(const BasisPtr& basis, const HamiltonianSpec& spec) {
  require_valid(basis, spec);
  return assemble(basis, spec, dressing_factor(basis, spec));
}

double renormalized_identity_deviation(const BasisPtr& basis, const HamiltonianSpec& spec, int block) {
  require_valid(basis, spec);
  const std::optional<Operator> w = dressing_factor(basis, spec);
  const int m = default_block(basis, w, block);
  const DenseMatrix d =
      assemble(basis, spec, w).block(m) - h_corrected(basis, spec.s, spec.coupling.total()).block(m);
  return d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
}

double lambda_spread(const BasisPtr& basis, const HamiltonianSpec& spec, const std::vector<double>& lambdas,
                     int block) {
  require_valid(basis, spec);
  const std::optional<Operator> w = dressing_factor(basis, spec);
  const int m = default_block(basis, w, block);
  const Eigen::VectorXd ref = block_spectrum(assemble(basis, spec, w), m);
  double spread = 0.0;
  for (double l : lambdas) {
    HamiltonianSpec other = spec;
    other.lambda = l;
    require_valid(basis, other);
    const Eigen::VectorXd ev = block_spectrum(assemble(basis, other, w), m);
    spread = std::max(spread, (ev - ref).cwiseAbs().maxCoeff());
  }
  return spread;
}

ConvergenceReport convergence_study(const BasisPtr& basis, const HamiltonianSpec& spec,
                                    const std::vector<double>& schedule, const ConvergenceOptions& opts) {
  spec.validate();
  if (schedule.empty()) throw ParameterError("convergence_study: empty schedule");
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (!(schedule[k] > schedule[k - 1])) throw ParameterError("convergence_study: schedule must be strictly increasing");
  const StructureReport structure = check_structure(spec.coupling);
  if (!structure.structural_pass()) throw StructuralError("convergence_study: coupling structure check failed");

  const FormFactor v = spec.coupling.total();
  require_grid(basis, v);

  ConvergenceReport rep;
  rep.schedule = schedule;
  rep.rows.resize(schedule.size());

  const Operator limit = h_corrected(basis, spec.s, v);
  std::unique_ptr<ResolventSolver> limit_solver;
  if (opts.distances) {
    limit_solver = std::make_unique<ResolventSolver>(limit, kShift);
    rep.limit_components = limit_solver->components();
    rep.largest_factorization = limit_solver->largest_factorization();
  }
  if (opts.ground_energies) rep.limit_ground_energy = ground_energy(limit);

  parallel_for(schedule.size(), opts.jobs, [&](std::size_t k) {
    ConvergenceRow& row = rep.rows[k];
    row.cutoff = schedule[k];
    const FormFactor vk = cutoff_ultraviolet(v, row.cutoff);
    const Operator hreg = h_reg(basis, spec.s, vk);
    const SpinMatrix e = renormalization_energy(vk);
    row.e_trace = e.trace().real();
    const Operator hk = hreg + spin_operator(basis, e);
    if (opts.distances && !covers_grid(v, row.cutoff)) {
      const ResolventSolver solver(hk, kShift);
      const NormEstimate est = estimate_norm(solver.as_map() - limit_solver->as_map(), opts.norm);
      if (!est.converged) {
        std::ostringstream os;
        os << "resolvent distance at cutoff " << row.cutoff << " did not converge (estimate " << est.value << ")";
        throw NumericError(os.str(), est.value);
      }
      row.resolvent_distance = est.value;
      row.distance_error = est.error_estimate;
    }
    if (opts.ground_energies) {
      row.ground_energy_reg = ground_energy(hreg);
      row.ground_energy_renorm = ground_energy(hk);
    }
  });

  const double first = rep.rows.front().resolvent_distance;
  const double last = rep.rows.back().resolvent_distance;
  for (std::size_t k = 1; k < rep.rows.size(); ++k)
    if (rep.rows[k].resolvent_distance > (1.0 + opts.jitter) * rep.rows[k - 1].resolvent_distance)
      rep.nonincreasing = false;
  rep.decay_ratio = first > 0.0 ? last / first : 0.0;
  rep.pass = opts.distances && rep.nonincreasing && rep.decay_ratio < opts.decay;
  return rep;
}

AppendixReport transformed_identity_deviation(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& c,
                                              const DenseMatrix& t) {
  const Eigen::Index n = a.rows();
  const DenseMatrix id = DenseMatrix::Identity(n, n);
  const cplx i(0.0, 1.0);
  AppendixReport rep;
  rep.dim = static_cast<int>(n);

  const DenseMatrix lhs_adj = (a * c * a.adjoint()).adjoint();
  const DenseMatrix rhs_adj = a * c.adjoint() * a.adjoint();
  rep.adjoint_deviation = (lhs_adj - rhs_adj).cwiseAbs().maxCoeff();

  const DenseMatrix ra = (a * t * a.adjoint() + i * id).partialPivLu().inverse();
  const DenseMatrix rb = (b * t * b.adjoint() + i * id).partialPivLu().inverse();
  const DenseMatrix ra_minus = (a * t * a.adjoint() - i * id).partialPivLu().inverse();
  const DenseMatrix lhs = ra - rb;
  const DenseMatrix first = ra * (b - a) * t * b.adjoint() * rb;
  const DenseMatrix tail = (b.adjoint() - a.adjoint()) * rb;
  const DenseMatrix rhs = first + (t * a.adjoint() * ra_minus).adjoint() * tail;
  const DenseMatrix literal = first + (t * a.adjoint() * ra).adjoint() * tail;
  rep.resolvent_deviation = (lhs - rhs).cwiseAbs().maxCoeff();
  rep.resolvent_literal_deviation = (lhs - literal).cwiseAbs().maxCoeff();

  Eigen::JacobiSVD<DenseMatrix> sa(a), sb(b);
  rep.condition_a = sa.singularValues()(0) / sa.singularValues()(n - 1);
  rep.condition_b = sb.singularValues()(0) / sb.singularValues()(n - 1);
  return rep;
}

AppendixReport verify_transformed_operator_identities(int dim, std::uint64_t seed) {
  if (dim < 1 || dim > 256) throw ParameterError("verify_transformed_operator_identities: dim must lie in [1, 256]");
  const Eigen::Index n = dim;
  const DenseMatrix id = DenseMatrix::Identity(n, n);
  auto perturbed_identity = [&](std::uint64_t s) {
    // ||X|| <= 1/2 keeps the condition number below 3.
    const DenseMatrix x = random_matrix(n, n, s);
    Eigen::JacobiSVD<DenseMatrix> svd(x);
    return DenseMatrix(id + 0.5 * x / svd.singularValues()(0));
  };
  const DenseMatrix a = perturbed_identity(seed);
  const DenseMatrix b = perturbed_identity(seed + 1);
  const DenseMatrix c = random_matrix(n, n, seed + 2);
  const DenseMatrix x = random_matrix(n, n, seed + 3);
  const DenseMatrix t = 0.5 * (x + x.adjoint());
  return transformed_identity_deviation(a, b, c, t);
}

}  // namespace sbren::renorm
