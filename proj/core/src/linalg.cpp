#include "sbren/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "sbren/errors.hpp"
#include "sbren/fock.hpp"

namespace sbren {

namespace {

using Index = Eigen::Index;

class UnionFind {
 public:
  explicit UnionFind(Index n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }
  Index find(Index x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& p = parent_[static_cast<std::size_t>(x)];
      p = parent_[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent_[static_cast<std::size_t>(a)] = b;
  }

 private:
  std::vector<Index> parent_;
};

// Groups [0, n) into connected components, each sorted ascending, ordered by
// their smallest member.
std::vector<std::vector<Index>> group(UnionFind& uf, Index n, const std::vector<char>* mask = nullptr) {
  std::vector<Index> slot(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<Index>> out;
  for (Index i = 0; i < n; ++i) {
    if (mask && !(*mask)[static_cast<std::size_t>(i)]) continue;
    const Index r = uf.find(i);
    Index& s = slot[static_cast<std::size_t>(r)];
    if (s < 0) {
      s = static_cast<Index>(out.size());
      out.emplace_back();
    }
    out[static_cast<std::size_t>(s)].push_back(i);
  }
  return out;
}

DenseMatrix orthonormalize(const DenseMatrix& x) {
  Eigen::HouseholderQR<DenseMatrix> qr(x);
  return qr.householderQ() * DenseMatrix::Identity(x.rows(), x.cols());
}

}  // namespace

// ---------------------------------------------------------------- LinearMap

LinearMap LinearMap::of(const Operator& a) {
  auto op = std::make_shared<const Operator>(a);
  LinearMap m;
  m.dim = a.dim();
  m.apply = [op](const DenseMatrix& x) -> DenseMatrix {
    if (op->is_dense()) return op->dense_ref() * x;
    return op->sparse_ref() * x;
  };
  m.apply_adjoint = [op](const DenseMatrix& x) -> DenseMatrix {
    if (op->is_dense()) return op->dense_ref().adjoint() * x;
    return op->sparse_ref().adjoint() * x;
  };
  return m;
}

LinearMap LinearMap::of(const DenseMatrix& a) {
  if (a.rows() != a.cols()) throw StructuralError("linear map: matrix must be square");
  auto mat = std::make_shared<const DenseMatrix>(a);
  LinearMap m;
  m.dim = a.rows();
  m.apply = [mat](const DenseMatrix& x) -> DenseMatrix { return *mat * x; };
  m.apply_adjoint = [mat](const DenseMatrix& x) -> DenseMatrix { return mat->adjoint() * x; };
  return m;
}

LinearMap operator-(const LinearMap& f, const LinearMap& g) {
  if (f.dim != g.dim) throw StructuralError("linear map: dimension mismatch in difference");
  LinearMap m;
  m.dim = f.dim;
  m.apply = [f, g](const DenseMatrix& x) -> DenseMatrix { return f.apply(x) - g.apply(x); };
  m.apply_adjoint = [f, g](const DenseMatrix& x) -> DenseMatrix { return f.apply_adjoint(x) - g.apply_adjoint(x); };
  return m;
}

// ---------------------------------------------------------------- norms

DenseMatrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  DenseMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      const double re = n(rng);
      const double im = n(rng);
      m(i, j) = cplx(re, im);
    }
  return m;
}

NormEstimate estimate_norm(const LinearMap& a, const NormOptions& opts) {
  NormEstimate est;
  if (a.dim == 0) {
    est.converged = true;
    return est;
  }
  const Index p = std::max<Index>(1, std::min<Index>(opts.block_size, a.dim));
  const Index max_basis = std::min<Index>(a.dim, std::max<Index>(p, static_cast<Index>(opts.max_basis_blocks) * p));

  // Krylov basis Q of A^*A (orthonormal columns) and its image AQ.
  DenseMatrix q = orthonormalize(random_matrix(a.dim, p, opts.seed));
  DenseMatrix aq = a.apply(q);
  Index used = p;
  DenseMatrix basis(a.dim, max_basis), image(a.dim, max_basis);
  basis.leftCols(p) = q;
  image.leftCols(p) = aq;

  double prev = -1.0, prev_change = -1.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const DenseMatrix gram = image.leftCols(used).adjoint() * image.leftCols(used);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(gram);
    const double sigma = std::sqrt(std::max(0.0, es.eigenvalues()(used - 1)));
    est.value = sigma;
    est.iterations = it;
    if (sigma == 0.0) {
      // A annihilates a random block, so A = 0 with probability one.
      est.converged = true;
      est.error_estimate = 0.0;
      return est;
    }
    if (prev >= 0.0) {
      const double change = std::abs(sigma - prev);
      double err = change;
      if (prev_change > 0.0) {
        const double r = change / prev_change;
        err = r < 1.0 ? change * r / (1.0 - r) : std::numeric_limits<double>::infinity();
      }
      est.error_estimate = std::max(err, change);
      if (change <= 4.0 * std::numeric_limits<double>::epsilon() * sigma ||
          (it >= 3 && est.error_estimate <= opts.rel_tol * sigma)) {
        est.converged = true;
        return est;
      }
      prev_change = change;
    }
    prev = sigma;

    if (used + p > max_basis) {
      // Thick restart on the leading Ritz vectors.
      const Index keep = std::min<Index>(used, std::max<Index>(p, max_basis / 2));
      const DenseMatrix ritz = es.eigenvectors().rightCols(keep);
      const DenseMatrix nb = basis.leftCols(used) * ritz;
      const DenseMatrix ni = image.leftCols(used) * ritz;
      basis.leftCols(keep) = nb;
      image.leftCols(keep) = ni;
      used = keep;
      aq = image.middleCols(used - p, p);
    }
    // Next block: A^*A applied to the newest block, orthogonalized twice.
    DenseMatrix w = a.apply_adjoint(aq);
    for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(used) * (basis.leftCols(used).adjoint() * w);
    Eigen::HouseholderQR<DenseMatrix> qr(w);
    const DenseMatrix r = qr.matrixQR().topRows(std::min<Index>(p, w.rows())).triangularView<Eigen::Upper>();
    if (r.diagonal().cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, sigma * sigma)) {
      // The Krylov space is invariant: the Ritz value is exact.
      est.converged = true;
      est.error_estimate = 0.0;
      return est;
    }
    q = qr.householderQ() * DenseMatrix::Identity(w.rows(), p);
    for (int pass = 0; pass < 2; ++pass) q -= basis.leftCols(used) * (basis.leftCols(used).adjoint() * q);
    q = orthonormalize(q);
    aq = a.apply(q);
    basis.middleCols(used, p) = q;
    image.middleCols(used, p) = aq;
    used += p;
  }
  return est;
}

double operator_norm(const LinearMap& a, const NormOptions& opts) {
  const NormEstimate e = estimate_norm(a, opts);
  if (!e.converged) {
    std::ostringstream os;
    os << "operator norm: block Krylov iteration did not converge in " << e.iterations << " iterations (estimate "
       << e.value << ", error estimate " << e.error_estimate << ")";
    throw NumericError(os.str(), e.value);
  }
  return e.value;
}

double operator_norm(const Operator& a, const NormOptions& opts) { return operator_norm(LinearMap::of(a), opts); }

// ---------------------------------------------------------------- resolvent solver

// H - z is split as [[K, B], [C, D]] into kept and eliminated states. D is
// block diagonal (whole small components and the spin blocks of the top
// boson sector of large ones) and is inverted blockwise; the Schur complement
// K - B D^{-1} C is factorized densely per component.
struct ResolventSolver::Component {
  std::vector<Index> idx;  // kept global indices, ascending
  Eigen::PartialPivLU<DenseMatrix> lu;
};

ResolventSolver::~ResolventSolver() = default;
ResolventSolver::ResolventSolver(ResolventSolver&&) noexcept = default;
ResolventSolver& ResolventSolver::operator=(ResolventSolver&&) noexcept = default;

namespace {
constexpr Index kEliminationBlockLimit = 256;
}

ResolventSolver::ResolventSolver(const Operator& h, cplx z, Index dense_limit) : dim_(h.dim()), z_(z) {
  using Triplet = Eigen::Triplet<cplx>;
  const SparseMatrix s = h.sparse();
  const OccupationBasis& basis = *h.basis();

  UnionFind uf(dim_);
  for (Index c = 0; c < s.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(s, c); it; ++it) uf.unite(it.row(), c);
  const auto groups = group(uf, dim_);

  std::vector<char> is_elim(static_cast<std::size_t>(dim_), 0);
  std::vector<std::vector<Index>> kept_sets;
  std::vector<std::vector<Index>> eblocks;
  for (const auto& g : groups) {
    const auto n = static_cast<Index>(g.size());
    if (n <= kEliminationBlockLimit) {
      for (Index i : g) is_elim[static_cast<std::size_t>(i)] = 1;
      eblocks.push_back(g);
      continue;
    }
    if (n <= dense_limit) {
      kept_sets.push_back(g);
      continue;
    }
    const int top = basis.n_max();
    std::vector<Index> kept, elim;
    for (Index i : g) (basis.total_of_state(static_cast<std::size_t>(i)) == top ? elim : kept).push_back(i);
    if (static_cast<Index>(kept.size()) > dense_limit) {
      std::ostringstream os;
      os << "resolvent: a coupled component of " << n << " states leaves " << kept.size()
         << " states after eliminating the top boson sector, above the dense limit " << dense_limit;
      throw ResourceError(os.str());
    }
    for (Index i : elim) is_elim[static_cast<std::size_t>(i)] = 1;
    UnionFind tuf(dim_);
    for (Index c : elim)
      for (SparseMatrix::InnerIterator it(s, c); it; ++it)
        if (is_elim[static_cast<std::size_t>(it.row())]) tuf.unite(it.row(), c);
    std::vector<char> mask(static_cast<std::size_t>(dim_), 0);
    for (Index i : elim) mask[static_cast<std::size_t>(i)] = 1;
    for (auto& eb : group(tuf, dim_, &mask)) {
      if (static_cast<Index>(eb.size()) > kEliminationBlockLimit) {
        std::ostringstream os;
        os << "resolvent: top boson sector couples " << eb.size() << " states internally; elimination needs small blocks";
        throw ResourceError(os.str());
      }
      eblocks.push_back(std::move(eb));
    }
    kept_sets.push_back(std::move(kept));
  }

  // Block inverse of D.
  std::vector<Triplet> dt;
  std::vector<Index> pos(static_cast<std::size_t>(dim_), -1);
  for (const auto& eb : eblocks) {
    const auto m = static_cast<Index>(eb.size());
    for (Index j = 0; j < m; ++j) pos[static_cast<std::size_t>(eb[static_cast<std::size_t>(j)])] = j;
    DenseMatrix d = DenseMatrix::Zero(m, m);
    for (Index j = 0; j < m; ++j)
      for (SparseMatrix::InnerIterator it(s, eb[static_cast<std::size_t>(j)]); it; ++it)
        if (is_elim[static_cast<std::size_t>(it.row())]) d(pos[static_cast<std::size_t>(it.row())], j) = it.value();
    d.diagonal().array() -= z;
    const DenseMatrix inv = m == 1 ? DenseMatrix::Constant(1, 1, 1.0 / d(0, 0)) : DenseMatrix(d.partialPivLu().inverse());
    if (!inv.allFinite()) throw NumericError("resolvent: singular elimination block");
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < m; ++i)
        if (inv(i, j) != 0.0) dt.emplace_back(eb[static_cast<std::size_t>(i)], eb[static_cast<std::size_t>(j)], inv(i, j));
  }
  dinv_ = SparseMatrix(dim_, dim_);
  dinv_.setFromTriplets(dt.begin(), dt.end());

  // Couplings between kept and eliminated states.
  std::vector<Triplet> bt, ct;
  for (Index c = 0; c < s.outerSize(); ++c) {
    const bool ce = is_elim[static_cast<std::size_t>(c)];
    for (SparseMatrix::InnerIterator it(s, c); it; ++it) {
      const bool re = is_elim[static_cast<std::size_t>(it.row())];
      if (!re && ce) bt.emplace_back(it.row(), c, it.value());
      if (re && !ce) ct.emplace_back(it.row(), c, it.value());
    }
  }
  b_ = SparseMatrix(dim_, dim_);
  b_.setFromTriplets(bt.begin(), bt.end());
  c_ = SparseMatrix(dim_, dim_);
  c_.setFromTriplets(ct.begin(), ct.end());
  const SparseMatrix update = b_.nonZeros() ? SparseMatrix(b_ * dinv_ * c_) : SparseMatrix(dim_, dim_);

  std::vector<Index> local(static_cast<std::size_t>(dim_), -1);
  for (auto& kept : kept_sets) {
    auto comp = std::make_unique<Component>();
    const auto nk = static_cast<Index>(kept.size());
    for (Index j = 0; j < nk; ++j) local[static_cast<std::size_t>(kept[static_cast<std::size_t>(j)])] = j;
    DenseMatrix schur = DenseMatrix::Zero(nk, nk);
    for (Index j = 0; j < nk; ++j) {
      const Index col = kept[static_cast<std::size_t>(j)];
      for (SparseMatrix::InnerIterator it(s, col); it; ++it)
        if (!is_elim[static_cast<std::size_t>(it.row())]) schur(local[static_cast<std::size_t>(it.row())], j) += it.value();
      for (SparseMatrix::InnerIterator it(update, col); it; ++it) schur(local[static_cast<std::size_t>(it.row())], j) -= it.value();
    }
    schur.diagonal().array() -= z;
    comp->lu.compute(schur);
    comp->idx = std::move(kept);
    comps_.push_back(std::move(comp));
  }
  n_blocks_ = eblocks.size();
  dinv_adj_ = dinv_.adjoint();
  b_adj_ = b_.adjoint();
  c_adj_ = c_.adjoint();
}

DenseMatrix ResolventSolver::solve_impl(const DenseMatrix& b, bool adjoint) const {
  if (b.rows() != dim_) throw StructuralError("resolvent solver: right-hand side has the wrong length");
  const SparseMatrix& dinv = adjoint ? dinv_adj_ : dinv_;
  const SparseMatrix& into_kept = adjoint ? c_adj_ : b_;
  const SparseMatrix& into_elim = adjoint ? b_adj_ : c_;
  const DenseMatrix y = dinv * b;
  const DenseMatrix r = b - into_kept * y;
  DenseMatrix x = DenseMatrix::Zero(dim_, b.cols());
  DenseMatrix rhs;
  for (const auto& cp : comps_) {
    const Component& c = *cp;
    const auto n = static_cast<Index>(c.idx.size());
    rhs.resize(n, b.cols());
    for (Index i = 0; i < n; ++i) rhs.row(i) = r.row(c.idx[static_cast<std::size_t>(i)]);
    const DenseMatrix sol = adjoint ? DenseMatrix(c.lu.adjoint().solve(rhs)) : DenseMatrix(c.lu.solve(rhs));
    for (Index i = 0; i < n; ++i) x.row(c.idx[static_cast<std::size_t>(i)]) = sol.row(i);
  }
  if (into_elim.nonZeros()) x += y - dinv * (into_elim * x);
  else x += y;
  return x;
}

DenseMatrix ResolventSolver::solve(const DenseMatrix& b) const { return solve_impl(b, false); }
DenseMatrix ResolventSolver::solve_adjoint(const DenseMatrix& b) const { return solve_impl(b, true); }

LinearMap ResolventSolver::as_map() const {
  LinearMap m;
  m.dim = dim_;
  m.apply = [this](const DenseMatrix& x) { return solve(x); };
  m.apply_adjoint = [this](const DenseMatrix& x) { return solve_adjoint(x); };
  return m;
}

std::size_t ResolventSolver::components() const { return comps_.size() + n_blocks_; }

Index ResolventSolver::largest_factorization() const {
  Index m = 0;
  for (const auto& c : comps_) m = std::max(m, static_cast<Index>(c->idx.size()));
  return m;
}

Operator resolvent(const Operator& h, cplx z, double residual_tol) {
  if (h.dim() > kDenseLimit) {
    std::ostringstream os;
    os << "resolvent: dimension " << h.dim() << " exceeds the dense limit " << kDenseLimit
       << "; use ResolventSolver for matrix-free access";
    throw ResourceError(os.str());
  }
  DenseMatrix m = h.dense();
  m.diagonal().array() -= z;
  Eigen::PartialPivLU<DenseMatrix> lu(m);
  DenseMatrix r = lu.inverse();
  if (!r.allFinite()) throw NumericError("resolvent: factorization is singular");
  DenseMatrix check = m * r;
  check.diagonal().array() -= 1.0;
  const double res = check.size() ? check.cwiseAbs().maxCoeff() : 0.0;
  if (!(res <= residual_tol)) {
    std::ostringstream os;
    os << "resolvent: residual " << res << " exceeds " << residual_tol;
    throw NumericError(os.str(), res);
  }
  return {h.basis(), std::move(r)};
}

// ---------------------------------------------------------------- eigenvalues

std::pair<double, Vector> lanczos_ground(const std::function<Vector(const Vector&)>& apply, Index dim,
                                         const LanczosOptions& opts) {
  if (dim == 0) throw ParameterError("lanczos: empty operator");
  Vector v = random_matrix(dim, 1, opts.seed).col(0);
  v.normalize();
  const Index m = std::min<Index>(opts.krylov_size, dim);
  double theta = 0.0;
  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    DenseMatrix basis(dim, m);
    Eigen::VectorXd alpha(m), beta(m);
    Index k = 0;
    bool invariant = false;
    basis.col(0) = v;
    for (; k < m; ++k) {
      Vector w = apply(basis.col(k));
      alpha(k) = basis.col(k).dot(w).real();
      // Full reorthogonalization; a second pass only when the first one
      // cancelled most of w.
      const double before = w.norm();
      w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).adjoint() * w);
      if (w.norm() < 0.7 * before) w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).adjoint() * w);
      beta(k) = w.norm();
      if (k + 1 < m) {
        if (beta(k) <= 1e-14 * std::max(1.0, std::abs(alpha(k)))) {
          ++k;
          invariant = true;
          break;
        }
        basis.col(k + 1) = w / beta(k);
      }
    }
    const Index kk = std::min(k, m);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(kk, kk);
    for (Index i = 0; i < kk; ++i) {
      t(i, i) = alpha(i);
      if (i + 1 < kk) t(i, i + 1) = t(i + 1, i) = beta(i);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    theta = es.eigenvalues()(0);
    const Eigen::VectorXd y = es.eigenvectors().col(0);
    Vector x = basis.leftCols(kk) * y.cast<cplx>();
    x.normalize();
    const double resid = (apply(x) - theta * x).norm();
    const double scale = opts.tol * std::max(1.0, std::abs(theta));
    // Kato-Temple: the eigenvalue error is at most resid^2 / gap, with the gap
    // estimated by the second Ritz value.
    const double gap = kk > 1 ? es.eigenvalues()(1) - theta : 0.0;
    const bool temple = gap > 0.0 && resid * resid <= scale * gap;
    if (resid <= scale || temple || kk == dim || invariant) return {theta, x};
    v = x;
  }
  std::ostringstream os;
  os << "lanczos: no convergence after " << opts.max_restarts << " restarts";
  throw NumericError(os.str(), theta);
}

double ground_energy(const Operator& h, double hermiticity_tol) {
  const double defect = h.hermiticity_defect();
  if (defect > hermiticity_tol) {
    std::ostringstream os;
    os << "ground_energy: operator deviates from its adjoint by " << defect;
    throw StructuralError(os.str());
  }
  if (h.dim() <= kDenseLimit) {
    DenseMatrix m = h.dense();
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  const SparseMatrix s = h.sparse();
  return lanczos_ground([&s](const Vector& x) -> Vector { return s * x; }, h.dim()).first;
}

// ---------------------------------------------------------------- threads

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace sbren
