#include "sbren/dressing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "sbren/errors.hpp"
#include "sbren/linalg.hpp"

namespace sbren::dressing {

namespace {

double block_max(const DenseMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double ratio(double lhs, double rhs) {
  if (lhs == 0.0) return 0.0;
  if (rhs == 0.0) return std::numeric_limits<double>::infinity();
  return lhs / rhs;
}

int require_safe(int m, const char* where) {
  if (m < 0) {
    std::ostringstream os;
    os << where << ": the Weyl factor leaks more than " << kLeakTolerance
       << " into the top boson sector even from the vacuum; raise n_max";
    throw ParameterError(os.str());
  }
  return m;
}

// Per column norm of the top-sector rows of w.
Eigen::VectorXd top_column_norms(const BasisPtr& basis, const Operator& w) {
  const DenseMatrix d = w.dense();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d.cols());
  const int top = basis->n_max();
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (basis->total_of_state(static_cast<std::size_t>(i)) != top) continue;
    out += d.row(i).cwiseAbs2().transpose();
  }
  return out.cwiseSqrt();
}

}  // namespace

double top_sector_leak(const BasisPtr& basis, const Operator& w, int m) {
  const Eigen::VectorXd norms = top_column_norms(basis, w);
  const auto keep = static_cast<Eigen::Index>(basis->states_up_to(m));
  return keep ? norms.head(keep).maxCoeff() : 0.0;
}

int weyl_safe_block(const BasisPtr& basis, const Operator& w, double leak) {
  const Eigen::VectorXd norms = top_column_norms(basis, w);
  int best = -1;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < norms.size(); ++j) {
    const int n = basis->total_of_state(static_cast<std::size_t>(j));
    if (n > best + 1) break;
    worst = std::max(worst, norms(j));
    if (worst > leak) break;
    if (j + 1 == norms.size() || basis->total_of_state(static_cast<std::size_t>(j + 1)) > n) best = n;
  }
  return std::min(best, basis->n_max() - 1);
}

Operator weyl_operator(const BasisPtr& basis, const FormFactor& f) {
  if (f.is_zero()) return Operator::identity(basis);
  if (static_cast<Eigen::Index>(basis->size()) > kDenseLimit) {
    std::ostringstream os;
    os << "weyl_operator: dimension " << basis->size() << " exceeds the dense limit " << kDenseLimit;
    throw ResourceError(os.str());
  }
  const Operator a = annihilate(basis, f);
  const DenseMatrix gen = (a - a.adjoint()).dense();
  DenseMatrix w = gen.exp();
  if (!w.allFinite()) throw NumericError("weyl_operator: matrix exponential produced non-finite entries");
  return {basis, std::move(w)};
}

Operator conjugate(const Operator& h, const Operator& w) { return w * h * w.adjoint(); }

double commutation_defect(const FormFactor& f, const FormFactor& g) {
  return std::max({commutator_violation(f, g), adjoint_commutator_violation(f, g), commutator_violation(f, f),
                   adjoint_commutator_violation(f, f)});
}

TransformReport verify_transforms(const BasisPtr& basis, const FormFactor& f, const FormFactor& g, int block,
                                  double tolerance) {
  TransformReport rep;
  rep.tolerance = tolerance;
  const double defect = commutation_defect(f, g);
  if (defect > kHypothesisTolerance) {
    rep.skipped = true;
    std::ostringstream os;
    os << "commutation hypotheses violated by " << defect;
    rep.reason = os.str();
    return rep;
  }
  const Operator w = weyl_operator(basis, f);
  rep.block = block >= 0 ? block : require_safe(weyl_safe_block(basis, w), "verify_transforms");
  rep.leak = top_sector_leak(basis, w, rep.block);
  const int m = rep.block;

  const Operator phi_g = field(basis, g);
  const SpinMatrix shift_g = weighted_inner(f, g, 0.0) + weighted_inner(g, f, 0.0);
  const Operator rhs_g = phi_g + spin_operator(basis, shift_g);
  rep.field_deviation = block_max(conjugate(phi_g, w).block(m) - rhs_g.block(m));

  const Operator dg = free_energy(basis);
  const FormFactor wf = f.omega_power(1.0);
  const Operator rhs_e = dg + field(basis, wf) + spin_operator(basis, weighted_inner(f, f, -1.0));
  rep.energy_deviation = block_max(conjugate(dg, w).block(m) - rhs_e.block(m));
  return rep;
}

bool ContinuityReport::pass() const {
  if (skipped) return true;
  const double lim = 1.0 + 1e-9;
  return vector_ratio <= lim && theta0_ratio <= lim && theta1_ratio <= lim;
}

ContinuityReport verify_continuity(const BasisPtr& basis, const FormFactor& f, const FormFactor& g, int samples,
                                   std::uint64_t seed, int block) {
  ContinuityReport rep;
  const double defect = commutation_defect(f, g);
  if (defect > kHypothesisTolerance) {
    rep.skipped = true;
    std::ostringstream os;
    os << "commutation hypotheses violated by " << defect;
    rep.reason = os.str();
    return rep;
  }
  const Operator wf = weyl_operator(basis, f);
  const Operator wg = weyl_operator(basis, g);
  const int m = block >= 0 ? block
                           : require_safe(std::min(weyl_safe_block(basis, wf), weyl_safe_block(basis, wg)),
                                          "verify_continuity");
  const auto keep = static_cast<Eigen::Index>(basis->states_up_to(m));
  const auto n = static_cast<Eigen::Index>(basis->size());

  const DenseMatrix diff = (wf - wg).dense();
  const FormFactor d = f - g;
  // d/dt W(tG)^* W(tF) = W(tG)^* (a(F-G) - a^dagger(F-G)) W(tF) and
  // a(H) - a^dagger(H) = i phi(iH).
  const FormFactor id = d * cplx(0.0, 1.0);
  const SpinMatrix cross = weighted_inner(f, id, 0.0) + weighted_inner(id, f, 0.0);
  const Operator phi_d = field(basis, id);
  const Operator cross_op = spin_operator(basis, cross);
  const SpinMatrix cross_lit = weighted_inner(f, d, 0.0) + weighted_inner(d, f, 0.0);
  const Operator phi_lit = field(basis, d);
  const Operator cross_lit_op = spin_operator(basis, cross_lit);

  DenseMatrix psi = random_matrix(n, std::max(1, samples), seed);
  psi.bottomRows(n - keep).setZero();
  rep.samples = static_cast<int>(psi.cols());
  const DenseMatrix lhs = diff * psi;
  const DenseMatrix a = phi_d.sparse() * psi;
  const DenseMatrix b = cross_op.sparse() * psi;
  const DenseMatrix a_lit = phi_lit.sparse() * psi;
  const DenseMatrix b_lit = cross_lit_op.sparse() * psi;
  for (Eigen::Index j = 0; j < psi.cols(); ++j) {
    rep.vector_ratio =
        std::max(rep.vector_ratio, ratio(lhs.col(j).norm(), a.col(j).norm() + 0.5 * b.col(j).norm()));
    rep.vector_ratio_literal = std::max(
        rep.vector_ratio_literal, ratio(lhs.col(j).norm(), a_lit.col(j).norm() + 0.5 * b_lit.col(j).norm()));
  }

  rep.theta0_ratio = operator_norm(LinearMap::of(diff)) / 2.0;

  DenseMatrix weighted = diff.leftCols(keep);
  for (Eigen::Index j = 0; j < keep; ++j)
    weighted.col(j) /= std::sqrt(1.0 + basis->energy(basis->config_of(static_cast<std::size_t>(j))));
  Eigen::JacobiSVD<DenseMatrix> svd(weighted);
  const double lhs1 = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  const double rhs1 = 4.0 * std::max(weighted_norm(d, 0.0), weighted_norm(d, 1.0)) + 0.5 * spin_opnorm(cross);
  rep.theta1_ratio = ratio(lhs1, rhs1);
  return rep;
}

}  // namespace sbren::dressing
