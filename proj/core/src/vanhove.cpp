#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "sbren/errors.hpp"
#include "sbren/renorm.hpp"

namespace sbren::renorm {

namespace {

struct ModeResult {
  double distance = 0.0;
  double parity = 1.0;
  double ground = 0.0;
  int levels = 0;
};

// Scalar one-mode problem h = omega N + sqrt(mu) (conj(v) a + v a^dagger) on
// levels 0..levels-1.
ModeResult solve_mode(double omega, double mu, cplx v, int block, int extra) {
  ModeResult r;
  const double alpha_sq = mu * std::norm(v) / (omega * omega);
  const int levels = block + extra + static_cast<int>(std::ceil(8.0 * alpha_sq)) + 1;
  r.levels = levels;

  DenseMatrix a = DenseMatrix::Zero(levels, levels);
  DenseMatrix n = DenseMatrix::Zero(levels, levels);
  for (int k = 1; k < levels; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  for (int k = 0; k < levels; ++k) n(k, k) = k;

  const double g = std::sqrt(mu);
  const DenseMatrix h = omega * n + g * (std::conj(v) * a + v * a.adjoint());
  const double c = mu * std::norm(v) / omega;

  const cplx f = v / omega;
  const DenseMatrix gen = g * (std::conj(f) * a - f * a.adjoint());
  const DenseMatrix w = gen.exp();

  const DenseMatrix dressed = w.adjoint() * (h + c * DenseMatrix::Identity(levels, levels)) * w;
  const DenseMatrix diff = (dressed - omega * n).topLeftCorner(block + 1, block + 1);
  Eigen::JacobiSVD<DenseMatrix> svd(diff);
  r.distance = svd.singularValues()(0);

  r.parity = 0.0;
  for (int k = 0; k < levels; ++k) r.parity += (k % 2 ? -1.0 : 1.0) * std::norm(w(k, 0));

  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h, Eigen::EigenvaluesOnly);
  r.ground = es.eigenvalues()(0);
  return r;
}

}  // namespace

Vector dominant_eigenvector(const SpinMatrix& b) {
  if (b.rows() != b.cols() || b.rows() == 0) throw StructuralError("dominant_eigenvector: matrix must be square");
  const double normality = (b * b.adjoint() - b.adjoint() * b).cwiseAbs().maxCoeff();
  if (normality > kStructureTolerance) throw StructuralError("dominant_eigenvector: matrix is not normal");
  Eigen::ComplexEigenSolver<SpinMatrix> es(b);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < b.rows(); ++k)
    if (std::abs(es.eigenvalues()(k)) > std::abs(es.eigenvalues()(best)) + 1e-12) best = k;
  Vector psi = es.eigenvectors().col(best);
  return psi / psi.norm();
}

VanHoveReport vanhove_demo(const FormFactor& v, const Vector& psi_in, const std::vector<double>& schedule,
                           const VanHoveOptions& opts) {
  if (schedule.empty()) throw ParameterError("vanhove_demo: empty schedule");
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (!(schedule[k] > schedule[k - 1])) throw ParameterError("vanhove_demo: schedule must be strictly increasing");
  if (psi_in.size() != v.spin_dim() || psi_in.norm() == 0.0)
    throw StructuralError("vanhove_demo: spin vector does not match the coupling");
  const Vector psi = psi_in / psi_in.norm();

  // Scalar coupling on ran P_psi.
  const ModeGrid& grid = *v.grid();
  std::vector<cplx> scalar(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    scalar[i] = psi.dot(v[i] * psi);
    const double scale = std::max(1.0, spin_opnorm(v[i]));
    const double leak = std::max((v[i] * psi - scalar[i] * psi).norm(),
                                 (v[i].adjoint() * psi - std::conj(scalar[i]) * psi).norm());
    if (leak > 1e-12 * scale) {
      std::ostringstream os;
      os << "vanhove_demo: span{psi} is not reducing for the coupling at mode " << i << " (leak " << leak << ")";
      throw StructuralError(os.str());
    }
  }

  VanHoveReport rep;
  {
    std::size_t ref = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (spin_opnorm(v[i]) > best) best = spin_opnorm(v[i]), ref = i;
    rep.eigenvalue = best > 0.0 ? scalar[ref] / spin_opnorm(v[ref]) : cplx(0.0);
  }
  rep.rows.resize(schedule.size());

  parallel_for(schedule.size(), opts.jobs, [&](std::size_t k) {
    VanHoveRow& row = rep.rows[k];
    row.cutoff = schedule[k];
    row.parity = 1.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double omega = grid.omega(i);
      const double mu = grid.mu(i);
      if (omega >= row.cutoff || scalar[i] == 0.0) continue;
      const ModeResult m = solve_mode(omega, mu, scalar[i], opts.block, opts.extra_levels);
      row.b0_norm_sq += mu * std::norm(scalar[i]) / (omega * omega);
      row.shift += mu * std::norm(scalar[i]) / omega;
      row.conjugation_distance += m.distance;
      row.parity *= m.parity;
      row.ground_energy += m.ground;
      row.max_levels = std::max(row.max_levels, m.levels);
    }
    row.parity_closed_form = std::exp(-2.0 * row.b0_norm_sq);
    row.ground_closed_form = -row.shift;
  });

  rep.conjugation_ok = std::all_of(rep.rows.begin(), rep.rows.end(), [&](const VanHoveRow& r) {
    return r.conjugation_distance <= opts.conjugation_tolerance;
  });
  rep.parity_decreasing = true;
  bool energy_decreasing = true;
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    if (!(rep.rows[k].parity < rep.rows[k - 1].parity)) rep.parity_decreasing = false;
    if (rep.rows[k].ground_energy > rep.rows[k - 1].ground_energy) energy_decreasing = false;
  }
  const double p0 = rep.rows.front().parity;
  rep.parity_ratio = p0 > 0.0 ? rep.rows.back().parity / p0 : 0.0;
  rep.parity_ok = rep.parity_decreasing && rep.parity_ratio < opts.parity_ratio;
  rep.energy_drop = rep.rows.front().ground_energy - rep.rows.back().ground_energy;
  rep.divergence_ok = energy_decreasing && rep.energy_drop > opts.energy_drop;
  return rep;
}

VanHoveReport vanhove_demo(double beta, double kappa, double lambda_max, int n_modes, const SpinMatrix& b,
                           const std::vector<double>& schedule, const VanHoveOptions& opts) {
  const PowerLawGrid pl = power_law_grid(beta, kappa, lambda_max, n_modes);
  std::vector<double> profile = pl.profile;
  for (std::size_t i = 0; i < profile.size(); ++i)
    if (pl.grid->infrared(i)) profile[i] = 0.0;
  const FormFactor v = FormFactor::separable(pl.grid, profile, b);
  return vanhove_demo(v, dominant_eigenvector(b), schedule, opts);
}

}  // namespace sbren::renorm
