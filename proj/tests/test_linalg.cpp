#include <atomic>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "sbren/errors.hpp"
#include "sbren/linalg.hpp"
#include "sbren/renorm.hpp"
#include "test_support.hpp"

namespace sbren {
namespace {

using test::max_abs;

BasisPtr basis_of(const GridPtr& g, int spin, int n_max) { return OccupationBasis::build(g, SpinSpace(spin), n_max); }

Operator spin_boson(const BasisPtr& b, const SpinMatrix& coupling, std::uint64_t seed) {
  const FormFactor v = test::random_separable(b->grid(), coupling, seed, 0.8);
  return renorm::h_corrected(b, spin::sigma_z(), v);
}

TEST(Resolvent, Examples) {
  const BasisPtr b = basis_of(test::small_grid(3), 2, 3);
  const Operator r0 = resolvent(Operator::zero(b), cplx(-1.0));
  EXPECT_LT((r0 - Operator::identity(b)).max_abs(), 1e-15);

  const DenseMatrix r = resolvent(free_energy(b), cplx(0.0, 1.0)).dense();
  for (std::size_t s = 0; s < b->size(); ++s) {
    const cplx expect = 1.0 / (b->energy(b->config_of(s)) - cplx(0.0, 1.0));
    EXPECT_LT(std::abs(r(s, s) - expect), 1e-15);
  }
  EXPECT_LT(max_abs(r - DenseMatrix(r.diagonal().asDiagonal())), 1e-15);
}

TEST(Resolvent, MultiplyBack) {
  const BasisPtr b = basis_of(test::small_grid(3), 2, 4);
  DenseMatrix a = random_matrix(static_cast<Eigen::Index>(b->size()), static_cast<Eigen::Index>(b->size()), 3);
  const Operator h(b, DenseMatrix(0.5 * (a + a.adjoint())));
  const cplx z(0.0, -1.0);
  const DenseMatrix r = resolvent(h, z).dense();
  const DenseMatrix shifted = h.dense() - z * DenseMatrix::Identity(r.rows(), r.cols());
  EXPECT_LT(max_abs(shifted * r - DenseMatrix::Identity(r.rows(), r.cols())), 1e-10);
}

TEST(OperatorNorm, Examples) {
  const BasisPtr b = basis_of(test::small_grid(1), 1, 1);
  EXPECT_NEAR(operator_norm(Operator::identity(b)), 1.0, 1e-10);
  DenseMatrix d = DenseMatrix::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = -4.0;
  EXPECT_NEAR(operator_norm(LinearMap::of(d)), 4.0, 1e-9);
}

TEST(OperatorNorm, MatchesSvd) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const DenseMatrix a = random_matrix(150, 150, seed);
    const double svd = Eigen::JacobiSVD<DenseMatrix>(a).singularValues()(0);
    const NormEstimate e = estimate_norm(LinearMap::of(a));
    EXPECT_TRUE(e.converged);
    EXPECT_NEAR(e.value / svd, 1.0, 1e-7);
  }
}

TEST(OperatorNorm, DifferenceOfMaps) {
  const DenseMatrix a = random_matrix(60, 60, 1);
  const DenseMatrix c = random_matrix(60, 60, 2);
  const double svd = Eigen::JacobiSVD<DenseMatrix>(a - c).singularValues()(0);
  EXPECT_NEAR(operator_norm(LinearMap::of(a) - LinearMap::of(c)) / svd, 1.0, 1e-7);
}

TEST(GroundEnergy, FreeEnergyAndVanHove) {
  const BasisPtr b = basis_of(test::small_grid(3), 2, 3);
  EXPECT_NEAR(ground_energy(free_energy(b)), 0.0, 1e-12);

  const GridPtr g = test::grid_of({{2.0, 1.0}}, 0.5);
  const BasisPtr b1 = basis_of(g, 1, 16);
  const FormFactor v = FormFactor::separable(g, std::vector<double>{1.0}, spin::identity(1));
  EXPECT_NEAR(ground_energy(renorm::h_reg(b1, spin::zero(1), v)), -0.5, 1e-8);
}

TEST(GroundEnergy, VariationalBoundForSpinBoson) {
  const BasisPtr b = basis_of(test::small_grid(4), 2, 4);
  const FormFactor v = test::random_separable(b->grid(), spin::sigma_x(), 5, 0.8);
  const Operator h = renorm::h_reg(b, spin::sigma_z(), v);
  const double e0 = ground_energy(h);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    Vector psi = Vector::Zero(static_cast<Eigen::Index>(b->size()));
    const SpinMatrix s = test::random_spin(2, rng);
    psi(0) = s(0, 0);
    psi(1) = s(1, 0);
    psi /= psi.norm();
    EXPECT_LE(e0, psi.dot(h.apply(psi)).real() + 1e-12);
  }
}

TEST(GroundEnergy, RejectsNonHermitian) {
  const BasisPtr b = basis_of(test::small_grid(2), 2, 2);
  EXPECT_THROW(ground_energy(annihilate(b, test::random_separable(b->grid(), spin::sigma_x(), 1))), StructuralError);
}

TEST(Lanczos, MatchesDenseEigensolver) {
  const BasisPtr b = basis_of(test::small_grid(10), 2, 3);
  const Operator h = spin_boson(b, spin::sigma_x() + 0.3 * spin::sigma_z(), 4);
  const double dense =
      Eigen::SelfAdjointEigenSolver<DenseMatrix>(h.dense(), Eigen::EigenvaluesOnly).eigenvalues()(0);
  const auto [theta, vec] = lanczos_ground([&](const Vector& x) { return h.apply(x); }, h.dim());
  EXPECT_NEAR(theta, dense, 1e-9 * std::max(1.0, std::abs(dense)));
  EXPECT_NEAR(vec.norm(), 1.0, 1e-10);
  EXPECT_LT((h.apply(vec) - theta * vec).norm(), 1e-4);
}

TEST(ResolventSolver, MatchesDenseResolventOnAllPaths) {
  const BasisPtr b = basis_of(test::small_grid(10), 2, 3);
  const cplx z(0.0, -1.0);
  for (const SpinMatrix& c : {SpinMatrix(spin::sigma_minus()), SpinMatrix(spin::sigma_x()),
                              SpinMatrix(spin::sigma_x() + 0.3 * spin::sigma_z())}) {
    const Operator h = spin_boson(b, c, 9);
    const DenseMatrix ref = resolvent(h, z).dense();
    const DenseMatrix rhs = random_matrix(h.dim(), 6, 2);
    for (Eigen::Index limit : {kDenseLimit, Eigen::Index(300)}) {
      const ResolventSolver solver(h, z, limit);
      EXPECT_LE(solver.largest_factorization(), std::max<Eigen::Index>(limit, 256));
      EXPECT_LT(max_abs(solver.solve(rhs) - ref * rhs), 1e-10) << limit;
      EXPECT_LT(max_abs(solver.solve_adjoint(rhs) - ref.adjoint() * rhs), 1e-10) << limit;
    }
  }
}

TEST(ResolventSolver, ReportsResourceLimit) {
  const BasisPtr b = basis_of(test::small_grid(10), 2, 3);
  const Operator h = spin_boson(b, spin::sigma_x() + 0.3 * spin::sigma_z(), 9);
  EXPECT_THROW(ResolventSolver(h, cplx(0.0, -1.0), 16), ResourceError);
}

TEST(RandomMatrix, Deterministic) {
  EXPECT_EQ(max_abs(random_matrix(7, 3, 42) - random_matrix(7, 3, 42)), 0.0);
  EXPECT_GT(max_abs(random_matrix(7, 3, 42) - random_matrix(7, 3, 43)), 0.0);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (int jobs : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

}  // namespace
}  // namespace sbren
