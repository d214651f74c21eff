#pragma once

#include <complex>
#include <memory>
#include <variant>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace sbren {

class OccupationBasis;
using BasisPtr = std::shared_ptr<const OccupationBasis>;

using cplx = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx>;
using Vector = Eigen::VectorXcd;

/// Matrix acting on a truncated spin x Fock space. Storage is sparse for
/// assembled second-quantized operators and dense for results of
/// exponentials or inverses; arithmetic keeps sparse storage when both
/// operands are sparse.
class Operator {
 public:
  Operator(BasisPtr basis, SparseMatrix m);
  Operator(BasisPtr basis, DenseMatrix m);

  static Operator identity(BasisPtr basis);
  static Operator zero(BasisPtr basis);

  const BasisPtr& basis() const noexcept { return basis_; }
  Eigen::Index dim() const noexcept;
  bool is_dense() const noexcept { return std::holds_alternative<DenseMatrix>(m_); }

  DenseMatrix dense() const;
  SparseMatrix sparse() const;
  /// Direct access; throws if the storage kind differs.
  const SparseMatrix& sparse_ref() const;
  const DenseMatrix& dense_ref() const;

  Vector apply(const Vector& x) const;
  Vector apply_adjoint(const Vector& x) const;

  Operator adjoint() const;
  /// P M P where P projects onto total boson number <= m.
  Operator restricted(int max_bosons) const;
  /// Dense block of rows/cols with total boson number <= m (the compression).
  DenseMatrix block(int max_bosons) const;

  /// Largest |entry|.
  double max_abs() const;
  /// max |M - M^*|
  double hermiticity_defect() const;

  Operator operator+(const Operator& o) const;
  Operator operator-(const Operator& o) const;
  Operator operator*(const Operator& o) const;
  Operator operator*(cplx c) const;
  Operator operator-() const { return *this * cplx(-1.0); }

 private:
  void require_same_basis(const Operator& o) const;

  BasisPtr basis_;
  std::variant<SparseMatrix, DenseMatrix> m_;
};

inline Operator operator*(cplx c, const Operator& a) { return a * c; }

}  // namespace sbren
