#include "sbren/operator.hpp"

#include <sstream>

#include "sbren/errors.hpp"
#include "sbren/fock.hpp"

namespace sbren {

namespace {

void require_dim(const BasisPtr& basis, Eigen::Index rows, Eigen::Index cols) {
  if (!basis) throw StructuralError("operator: null basis");
  const auto n = static_cast<Eigen::Index>(basis->size());
  if (rows != n || cols != n) {
    std::ostringstream os;
    os << "operator: matrix is " << rows << "x" << cols << " but the basis has " << n << " states";
    throw StructuralError(os.str());
  }
}

}  // namespace

Operator::Operator(BasisPtr basis, SparseMatrix m) : basis_(std::move(basis)) {
  require_dim(basis_, m.rows(), m.cols());
  m.makeCompressed();
  m_ = std::move(m);
}

Operator::Operator(BasisPtr basis, DenseMatrix m) : basis_(std::move(basis)) {
  require_dim(basis_, m.rows(), m.cols());
  m_ = std::move(m);
}

Operator Operator::identity(BasisPtr basis) {
  const auto n = static_cast<Eigen::Index>(basis->size());
  SparseMatrix m(n, n);
  m.setIdentity();
  return {std::move(basis), std::move(m)};
}

Operator Operator::zero(BasisPtr basis) {
  const auto n = static_cast<Eigen::Index>(basis->size());
  return {std::move(basis), SparseMatrix(n, n)};
}

Eigen::Index Operator::dim() const noexcept { return static_cast<Eigen::Index>(basis_->size()); }

DenseMatrix Operator::dense() const {
  if (auto* d = std::get_if<DenseMatrix>(&m_)) return *d;
  return DenseMatrix(std::get<SparseMatrix>(m_));
}

SparseMatrix Operator::sparse() const {
  if (auto* s = std::get_if<SparseMatrix>(&m_)) return *s;
  return std::get<DenseMatrix>(m_).sparseView(0.0, 0.0);
}

const SparseMatrix& Operator::sparse_ref() const {
  if (auto* s = std::get_if<SparseMatrix>(&m_)) return *s;
  throw StructuralError("operator: sparse storage requested from a dense operator");
}

const DenseMatrix& Operator::dense_ref() const {
  if (auto* d = std::get_if<DenseMatrix>(&m_)) return *d;
  throw StructuralError("operator: dense storage requested from a sparse operator");
}

Vector Operator::apply(const Vector& x) const {
  if (x.size() != dim()) throw StructuralError("operator: vector length does not match dimension");
  return std::visit([&](const auto& m) -> Vector { return m * x; }, m_);
}

Vector Operator::apply_adjoint(const Vector& x) const {
  if (x.size() != dim()) throw StructuralError("operator: vector length does not match dimension");
  return std::visit([&](const auto& m) -> Vector { return m.adjoint() * x; }, m_);
}

Operator Operator::adjoint() const {
  if (auto* s = std::get_if<SparseMatrix>(&m_)) return {basis_, SparseMatrix(s->adjoint())};
  return {basis_, DenseMatrix(std::get<DenseMatrix>(m_).adjoint())};
}

Operator Operator::restricted(int max_bosons) const {
  if (max_bosons < 0) return zero(basis_);
  const Operator p = sector_projector(basis_, std::min(max_bosons, basis_->n_max()));
  return p * (*this) * p;
}

DenseMatrix Operator::block(int max_bosons) const {
  // Sectors are contiguous from index 0 in the basis ordering.
  const auto k = static_cast<Eigen::Index>(basis_->states_up_to(max_bosons));
  if (auto* d = std::get_if<DenseMatrix>(&m_)) return d->topLeftCorner(k, k);
  const SparseMatrix& s = std::get<SparseMatrix>(m_);
  DenseMatrix out = DenseMatrix::Zero(k, k);
  for (Eigen::Index c = 0; c < k; ++c)
    for (SparseMatrix::InnerIterator it(s, c); it; ++it)
      if (it.row() < k) out(it.row(), c) = it.value();
  return out;
}

double Operator::max_abs() const {
  if (auto* d = std::get_if<DenseMatrix>(&m_)) return d->size() == 0 ? 0.0 : d->cwiseAbs().maxCoeff();
  const SparseMatrix& s = std::get<SparseMatrix>(m_);
  double m = 0.0;
  for (Eigen::Index i = 0; i < s.nonZeros(); ++i) m = std::max(m, std::abs(s.valuePtr()[i]));
  return m;
}

double Operator::hermiticity_defect() const { return (*this - adjoint()).max_abs(); }

void Operator::require_same_basis(const Operator& o) const {
  if (basis_ != o.basis_ && basis_->size() != o.basis_->size()) {
    throw StructuralError("operator: operands act on different bases");
  }
  if (basis_ != o.basis_) throw StructuralError("operator: operands act on different basis instances");
}

Operator Operator::operator+(const Operator& o) const {
  require_same_basis(o);
  if (!is_dense() && !o.is_dense()) return {basis_, SparseMatrix(sparse_ref() + o.sparse_ref())};
  DenseMatrix r = dense();
  std::visit([&](const auto& m) { r += m; }, o.m_);
  return {basis_, std::move(r)};
}

Operator Operator::operator-(const Operator& o) const {
  require_same_basis(o);
  if (!is_dense() && !o.is_dense()) return {basis_, SparseMatrix(sparse_ref() - o.sparse_ref())};
  DenseMatrix r = dense();
  std::visit([&](const auto& m) { r -= m; }, o.m_);
  return {basis_, std::move(r)};
}

Operator Operator::operator*(const Operator& o) const {
  require_same_basis(o);
  if (!is_dense() && !o.is_dense()) {
    SparseMatrix r = (sparse_ref() * o.sparse_ref()).pruned(0.0, 0.0);
    return {basis_, std::move(r)};
  }
  if (is_dense() && o.is_dense()) return {basis_, DenseMatrix(dense_ref() * o.dense_ref())};
  if (is_dense()) return {basis_, DenseMatrix(dense_ref() * o.sparse_ref())};
  return {basis_, DenseMatrix(sparse_ref() * o.dense_ref())};
}

Operator Operator::operator*(cplx c) const {
  if (auto* s = std::get_if<SparseMatrix>(&m_)) return {basis_, SparseMatrix(*s * c)};
  return {basis_, DenseMatrix(std::get<DenseMatrix>(m_) * c)};
}

}  // namespace sbren
