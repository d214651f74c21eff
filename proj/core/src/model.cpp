#include "sbren/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sbren/errors.hpp"

namespace sbren {

ModeGrid::ModeGrid(std::vector<Mode> modes, double kappa) : modes_(std::move(modes)), kappa_(kappa) {
  if (!(kappa_ > 0.0)) throw ParameterError("mode grid: kappa must be positive");
  if (modes_.empty()) throw ParameterError("mode grid: at least one mode is required");
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (!(modes_[i].omega > 0.0) || !std::isfinite(modes_[i].omega)) {
      std::ostringstream os;
      os << "mode grid: omega of mode " << i << " must be positive and finite";
      throw ParameterError(os.str());
    }
    if (!(modes_[i].mu > 0.0) || !std::isfinite(modes_[i].mu)) {
      std::ostringstream os;
      os << "mode grid: mu of mode " << i << " must be positive and finite";
      throw ParameterError(os.str());
    }
  }
}

std::vector<double> ModeGrid::omegas() const {
  std::vector<double> out(modes_.size());
  std::transform(modes_.begin(), modes_.end(), out.begin(), [](const Mode& m) { return m.omega; });
  return out;
}

bool operator==(const ModeGrid& a, const ModeGrid& b) {
  if (&a == &b) return true;
  if (a.kappa_ != b.kappa_ || a.modes_.size() != b.modes_.size()) return false;
  for (std::size_t i = 0; i < a.modes_.size(); ++i) {
    const Mode& x = a.modes_[i];
    const Mode& y = b.modes_[i];
    if (x.label != y.label || x.omega != y.omega || x.mu != y.mu) return false;
  }
  return true;
}

SpinSpace::SpinSpace(int d) : dim(d) {
  if (d < 1) throw ParameterError("spin space: dimension must be at least 1");
}

namespace spin {

SpinMatrix sigma_x() {
  SpinMatrix m = SpinMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

SpinMatrix sigma_y() {
  SpinMatrix m = SpinMatrix::Zero(2, 2);
  m(0, 1) = cplx(0.0, -1.0);
  m(1, 0) = cplx(0.0, 1.0);
  return m;
}

SpinMatrix sigma_z() {
  SpinMatrix m = SpinMatrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

SpinMatrix sigma_minus() {
  SpinMatrix m = SpinMatrix::Zero(2, 2);
  m(1, 0) = 1.0;
  return m;
}

SpinMatrix sigma_plus() { return sigma_minus().adjoint(); }

SpinMatrix identity(int n) { return SpinMatrix::Identity(n, n); }

SpinMatrix zero(int n) { return SpinMatrix::Zero(n, n); }

SpinMatrix kron(const SpinMatrix& a, const SpinMatrix& b) {
  SpinMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

SpinMatrix kron_power(const SpinMatrix& a, int k) {
  if (k < 1) throw ParameterError("kron_power: exponent must be at least 1");
  SpinMatrix out = a;
  for (int i = 1; i < k; ++i) out = kron(out, a);
  return out;
}

}  // namespace spin

FormFactor::FormFactor(GridPtr grid, std::vector<SpinMatrix> values)
    : grid_(std::move(grid)), values_(std::move(values)), spin_dim_(0) {
  if (!grid_) throw StructuralError("form factor: null grid");
  if (values_.size() != grid_->size()) {
    throw StructuralError("form factor: number of values does not match number of grid modes");
  }
  spin_dim_ = static_cast<int>(values_.front().rows());
  for (const auto& v : values_) {
    if (v.rows() != spin_dim_ || v.cols() != spin_dim_) {
      throw StructuralError("form factor: all values must be square matrices of the same dimension");
    }
  }
  if (spin_dim_ < 1) throw StructuralError("form factor: empty spin matrices");
}

FormFactor FormFactor::zero(GridPtr grid, int spin_dim) {
  if (!grid) throw StructuralError("form factor: null grid");
  std::vector<SpinMatrix> vals(grid->size(), SpinMatrix::Zero(spin_dim, spin_dim));
  return {std::move(grid), std::move(vals)};
}

FormFactor FormFactor::separable(GridPtr grid, const std::vector<cplx>& profile, const SpinMatrix& b) {
  if (!grid) throw StructuralError("form factor: null grid");
  if (profile.size() != grid->size()) throw StructuralError("form factor: profile length does not match grid");
  std::vector<SpinMatrix> vals;
  vals.reserve(profile.size());
  for (cplx p : profile) vals.push_back(p * b);
  return {std::move(grid), std::move(vals)};
}

FormFactor FormFactor::separable(GridPtr grid, const std::vector<double>& profile, const SpinMatrix& b) {
  std::vector<cplx> p(profile.begin(), profile.end());
  return separable(std::move(grid), p, b);
}

bool FormFactor::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](const SpinMatrix& m) { return m.isZero(0.0); });
}

FormFactor FormFactor::omega_power(double p) const {
  return map_omega([p](double w) { return std::pow(w, p); });
}

void FormFactor::require_compatible(const FormFactor& o) const {
  if (grid_ != o.grid_ && !(*grid_ == *o.grid_)) throw StructuralError("form factors live on different grids");
  if (spin_dim_ != o.spin_dim_) throw StructuralError("form factors have different spin dimensions");
}

FormFactor FormFactor::operator+(const FormFactor& o) const {
  require_compatible(o);
  std::vector<SpinMatrix> out(values_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += o.values_[i];
  return {grid_, std::move(out)};
}

FormFactor FormFactor::operator-(const FormFactor& o) const {
  require_compatible(o);
  std::vector<SpinMatrix> out(values_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= o.values_[i];
  return {grid_, std::move(out)};
}

FormFactor FormFactor::operator*(cplx c) const {
  std::vector<SpinMatrix> out(values_);
  for (auto& m : out) m *= c;
  return {grid_, std::move(out)};
}

SpinMatrix weighted_inner(const FormFactor& f, const FormFactor& g, double s) {
  f.require_compatible(g);
  const ModeGrid& grid = *f.grid();
  SpinMatrix acc = SpinMatrix::Zero(f.spin_dim(), f.spin_dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    acc += (grid.mu(i) * std::pow(grid.omega(i), -s)) * (f[i].adjoint() * g[i]);
  }
  return acc;
}

double spin_opnorm(const SpinMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.isZero(0.0)) return 0.0;
  Eigen::JacobiSVD<SpinMatrix> svd(m);
  return svd.singularValues()(0);
}

double weighted_norm(const FormFactor& f, double s) {
  const ModeGrid& grid = *f.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double n = spin_opnorm(f[i]);
    acc += grid.mu(i) * std::pow(grid.omega(i), -s) * n * n;
  }
  return std::sqrt(acc);
}

std::pair<FormFactor, FormFactor> split_infrared(const FormFactor& f, double kappa) {
  if (!(kappa > 0.0)) throw ParameterError("split_infrared: kappa must be positive");
  std::vector<SpinMatrix> le(f.values()), gt(f.values());
  const ModeGrid& grid = *f.grid();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.omega(i) <= kappa)
      gt[i].setZero();
    else
      le[i].setZero();
  }
  return {FormFactor(f.grid(), std::move(le)), FormFactor(f.grid(), std::move(gt))};
}

FormFactor cutoff_ultraviolet(const FormFactor& f, double lambda) {
  if (!(lambda > 0.0)) throw ParameterError("cutoff_ultraviolet: Lambda must be positive");
  return f.map_omega([lambda](double w) { return w < lambda ? 1.0 : 0.0; });
}

SpinMatrix renormalization_energy(const FormFactor& f) {
  auto [le, gt] = split_infrared(f, f.grid()->kappa());
  (void)le;
  return weighted_inner(gt, gt, 1.0);
}

double nilpotency_violation(const FormFactor& f) {
  double worst = 0.0;
  for (const auto& a : f.values())
    for (const auto& b : f.values()) worst = std::max(worst, (a * b).cwiseAbs().maxCoeff());
  return worst;
}

double commutator_violation(const FormFactor& f, const FormFactor& g) {
  f.require_compatible(g);
  double worst = 0.0;
  for (const auto& a : f.values())
    for (const auto& b : g.values()) worst = std::max(worst, (a * b - b * a).cwiseAbs().maxCoeff());
  return worst;
}

double adjoint_commutator_violation(const FormFactor& f, const FormFactor& g) {
  f.require_compatible(g);
  double worst = 0.0;
  for (const auto& a : f.values())
    for (const auto& b0 : g.values()) {
      const SpinMatrix b = b0.adjoint();
      worst = std::max(worst, (a * b - b * a).cwiseAbs().maxCoeff());
    }
  return worst;
}

bool StructureReport::structural_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const StructureCheck& c) { return c.pass; });
}

bool StructureReport::pass() const { return structural_pass() && admissible; }

const StructureCheck* StructureReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

StructureReport check_structure(const CouplingDecomposition& d, double tol) {
  d.v_le.require_compatible(d.v_d);
  d.v_le.require_compatible(d.v_n);
  const ModeGrid& grid = *d.v_le.grid();

  StructureReport rep;
  auto add = [&](std::string name, double violation) {
    rep.checks.push_back({std::move(name), violation, violation <= tol});
  };

  double le_out = 0.0, d_in = 0.0, n_in = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.infrared(i)) {
      d_in = std::max(d_in, d.v_d[i].cwiseAbs().maxCoeff());
      n_in = std::max(n_in, d.v_n[i].cwiseAbs().maxCoeff());
    } else {
      le_out = std::max(le_out, d.v_le[i].cwiseAbs().maxCoeff());
    }
  }
  add("support_le", le_out);
  add("support_d", d_in);
  add("support_n", n_in);

  double normal = 0.0;
  for (const auto& m : d.v_d.values()) {
    normal = std::max(normal, (m.adjoint() * m - m * m.adjoint()).cwiseAbs().maxCoeff());
  }
  add("normality_d", normal);
  add("nilpotency_n", nilpotency_violation(d.v_n));
  add("commute_d_n", commutator_violation(d.v_d, d.v_n));
  add("commute_dadj_n", adjoint_commutator_violation(d.v_d, d.v_n));
  // The dressing transformation acts on the whole interaction, so the infrared
  // part has to commute with the normal part as well.
  add("commute_d_le", std::max(commutator_violation(d.v_d, d.v_le), adjoint_commutator_violation(d.v_d, d.v_le)));

  rep.v_n_b2_norm = weighted_norm(d.v_n, 2.0);
  if (d.s_n < 1.0 || d.s_n > 2.0) {
    rep.admissible = false;
    rep.admissibility_route = "s_N outside [1,2]";
  } else if (d.s_n < 2.0) {
    rep.admissible = true;
    rep.admissibility_route = "s_N < 2";
  } else if (rep.v_n_b2_norm < 0.5) {
    rep.admissible = true;
    rep.admissibility_route = "||V_N||_b2 < 1/2";
  } else {
    rep.admissible = false;
    rep.admissibility_route = "||V_N||_b2 >= 1/2 with s_N = 2; enlarge kappa";
  }
  return rep;
}

PowerLawGrid power_law_grid(double beta, double kappa, double lambda_max, int n_modes) {
  if (n_modes < 2) throw ParameterError("power_law_grid: n_modes must be at least 2");
  if (!(kappa > 0.0) || !(lambda_max > kappa)) {
    throw ParameterError("power_law_grid: require 0 < kappa < lambda_max");
  }
  const double lo = 0.5 * kappa;
  const double total = std::log(lambda_max / lo);
  int n_ir = static_cast<int>(std::lround(n_modes * std::log(2.0) / total));
  n_ir = std::clamp(n_ir, 1, n_modes - 1);
  const int n_uv = n_modes - n_ir;

  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(n_modes) + 1);
  for (int j = 0; j <= n_ir; ++j) edges.push_back(lo * std::pow(2.0, static_cast<double>(j) / n_ir));
  const double uv_ratio = lambda_max / kappa;
  for (int j = 1; j <= n_uv; ++j) edges.push_back(kappa * std::pow(uv_ratio, static_cast<double>(j) / n_uv));
  edges.front() = lo;
  edges[static_cast<std::size_t>(n_ir)] = kappa;
  edges.back() = lambda_max;

  std::vector<Mode> modes;
  std::vector<double> profile;
  modes.reserve(static_cast<std::size_t>(n_modes));
  profile.reserve(static_cast<std::size_t>(n_modes));
  for (int j = 0; j < n_modes; ++j) {
    const double a = edges[static_cast<std::size_t>(j)];
    const double b = edges[static_cast<std::size_t>(j) + 1];
    const double k = std::sqrt(a * b);
    modes.push_back({k, k, b - a});
    profile.push_back(std::pow(k, -beta));
  }
  return {std::make_shared<const ModeGrid>(std::move(modes), kappa), std::move(profile)};
}

}  // namespace sbren
