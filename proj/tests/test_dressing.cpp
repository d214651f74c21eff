#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "sbren/dressing.hpp"
#include "sbren/errors.hpp"
#include "sbren/linalg.hpp"
#include "test_support.hpp"

namespace sbren {
namespace {

using test::max_abs;

BasisPtr basis_of(const GridPtr& g, int spin, int n_max) { return OccupationBasis::build(g, SpinSpace(spin), n_max); }

// Partial sums of the coherent state W(F) Omega = e^{-|z|^2/2} sum_n (-z)^n / sqrt(n!) |n>
// for one scalar mode with z = sqrt(mu) F; W(F) = exp(a(F) - a^dagger(F)).
std::vector<cplx> coherent_amplitudes(cplx z, int levels) {
  std::vector<cplx> c(levels);
  cplx term = std::exp(-0.5 * std::norm(z));
  for (int n = 0; n < levels; ++n) {
    c[n] = term;
    term *= -z / std::sqrt(static_cast<double>(n + 1));
  }
  return c;
}

TEST(WeylOperator, ZeroFieldIsIdentity) {
  const GridPtr g = test::small_grid(2);
  const BasisPtr b = basis_of(g, 2, 4);
  EXPECT_EQ((dressing::weyl_operator(b, FormFactor::zero(g, 2)) - Operator::identity(b)).max_abs(), 0.0);
}

TEST(WeylOperator, UnitaryOnTruncation) {
  const GridPtr g = test::small_grid(3);
  const BasisPtr b = basis_of(g, 2, 6);
  const FormFactor f = test::random_separable(g, spin::sigma_x(), 2, 0.9);
  const DenseMatrix w = dressing::weyl_operator(b, f).dense();
  EXPECT_LT(max_abs(w * w.adjoint() - DenseMatrix::Identity(w.rows(), w.cols())), 1e-12);
}

TEST(WeylOperator, CoherentStateSeries) {
  const GridPtr g = test::grid_of({{1.0, 1.0}}, 0.5);
  const int n_max = 24;
  const BasisPtr b = basis_of(g, 1, n_max);
  for (double amp : {0.3, 0.7, 1.0}) {
    const FormFactor f = FormFactor::separable(g, std::vector<cplx>{cplx(amp, 0.4 * amp)}, spin::identity(1));
    const double norm_sq = std::pow(weighted_norm(f, 0.0), 2);
    ASSERT_GE(n_max, 8.0 * norm_sq);
    const DenseMatrix w = dressing::weyl_operator(b, f).dense();
    const std::vector<cplx> c = coherent_amplitudes(cplx(amp, 0.4 * amp), n_max + 1);
    for (int n = 0; n <= 10; ++n) EXPECT_LT(std::abs(w(n, 0) - c[n]), 1e-8) << amp << ' ' << n;
    EXPECT_NEAR(w(0, 0).real(), std::exp(-0.5 * norm_sq), 1e-8);
    double parity = 0.0;
    for (int n = 0; n <= n_max; ++n) parity += (n % 2 ? -1.0 : 1.0) * std::norm(w(n, 0));
    EXPECT_NEAR(parity, std::exp(-2.0 * norm_sq), 1e-8);
  }
}

TEST(WeylOperator, GroupInverseOnSafeBlock) {
  const GridPtr g = test::small_grid(2);
  const BasisPtr b = basis_of(g, 2, 14);
  const FormFactor f = test::random_separable(g, spin::sigma_x(), 7, 0.5);
  const Operator w = dressing::weyl_operator(b, f);
  const int m = dressing::weyl_safe_block(b, w);
  ASSERT_GE(m, 2);
  const Operator prod = w * dressing::weyl_operator(b, -f);
  EXPECT_LT(max_abs(prod.block(m) - DenseMatrix::Identity(b->states_up_to(m), b->states_up_to(m))), 1e-8);
}

TEST(WeylOperator, DenseLimit) {
  const BasisPtr b = basis_of(test::small_grid(12), 2, 5);
  ASSERT_GT(static_cast<Eigen::Index>(b->size()), kDenseLimit);
  EXPECT_THROW(dressing::weyl_operator(b, test::random_separable(b->grid(), spin::sigma_x(), 1)), ResourceError);
}

TEST(SafeBlock, LeakIsMonotoneAndBounded) {
  const GridPtr g = test::small_grid(2);
  const BasisPtr b = basis_of(g, 2, 12);
  const Operator w = dressing::weyl_operator(b, test::random_separable(g, spin::sigma_x(), 3, 0.5));
  double prev = 0.0;
  for (int m = 0; m < 12; ++m) {
    const double leak = dressing::top_sector_leak(b, w, m);
    EXPECT_GE(leak, prev);
    prev = leak;
  }
  const int m = dressing::weyl_safe_block(b, w);
  ASSERT_GE(m, 0);
  EXPECT_LE(dressing::top_sector_leak(b, w, m), dressing::kLeakTolerance);
  EXPECT_GT(dressing::top_sector_leak(b, w, m + 1), dressing::kLeakTolerance);
  EXPECT_EQ(dressing::weyl_safe_block(b, Operator::identity(b)), 11);
}

TEST(Conjugate, Examples) {
  const GridPtr g = test::small_grid(3);
  const BasisPtr b = basis_of(g, 2, 8);
  const FormFactor f = test::random_separable(g, spin::sigma_x(), 4, 0.4);
  const Operator h = free_energy(b) + field(b, f) + spin_operator(b, spin::sigma_z());
  EXPECT_EQ((dressing::conjugate(h, Operator::identity(b)) - h).max_abs(), 0.0);
  const Operator w = dressing::weyl_operator(b, f);
  EXPECT_LT((dressing::conjugate(Operator::identity(b), w) - Operator::identity(b)).max_abs(), 1e-12);

  // Eigenvalues of the full truncated operator are invariant under exact unitaries.
  const auto ev = [](const Operator& a) {
    return Eigen::SelfAdjointEigenSolver<DenseMatrix>(a.dense(), Eigen::EigenvaluesOnly).eigenvalues().eval();
  };
  EXPECT_LT((ev(dressing::conjugate(h, w)) - ev(h)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Transforms, ZeroField) {
  const GridPtr g = test::small_grid(2);
  const BasisPtr b = basis_of(g, 2, 8);
  const FormFactor gf = test::random_separable(g, spin::sigma_x(), 2);
  const dressing::TransformReport r = dressing::verify_transforms(b, FormFactor::zero(g, 2), gf);
  EXPECT_FALSE(r.skipped);
  EXPECT_EQ(r.field_deviation, 0.0);
  EXPECT_EQ(r.energy_deviation, 0.0);
}

TEST(Transforms, ScalarOneMode) {
  const GridPtr g = test::grid_of({{1.0, 1.0}}, 0.5);
  const BasisPtr b = basis_of(g, 1, 14);
  const double t = 0.1;
  const FormFactor f = FormFactor::separable(g, std::vector<double>{t}, spin::identity(1));
  const Operator w = dressing::weyl_operator(b, f);
  const int m = 6;
  // W phi(t) W^* = phi(t) + 2 t^2.
  const Operator rhs = field(b, f) + Operator::identity(b) * cplx(2.0 * t * t);
  EXPECT_LT(max_abs(dressing::conjugate(field(b, f), w).block(m) - rhs.block(m)), 1e-8);
  const dressing::TransformReport r = dressing::verify_transforms(b, f, f, m);
  EXPECT_LE(r.field_deviation, 1e-8);
  EXPECT_LE(r.energy_deviation, 1e-8);
}

TEST(Transforms, NormalDressingReproducesField) {
  const GridPtr g = test::grid_of({{1.5, 0.4}, {2.5, 0.6}, {4.0, 0.5}}, 1.0);
  const BasisPtr b = basis_of(g, 2, 12);
  const FormFactor vd = FormFactor::separable(g, std::vector<double>{0.5, 0.4, 0.3}, spin::sigma_x());
  const FormFactor f = vd.omega_power(-1.0);
  ASSERT_LE(weighted_norm(f, 0.0), 0.5);
  const Operator w = dressing::weyl_operator(b, f);
  const int m = dressing::weyl_safe_block(b, w);
  ASSERT_GE(m, 1);
  const Operator rhs = free_energy(b) + field(b, vd) + spin_operator(b, weighted_inner(f, f, -1.0));
  EXPECT_LT(max_abs(dressing::conjugate(free_energy(b), w).block(m) - rhs.block(m)), 1e-7);
  const dressing::TransformReport r = dressing::verify_transforms(b, f, vd);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.block, m);
}

TEST(Transforms, HypothesisViolationIsSkipped) {
  const GridPtr g = test::small_grid(2);
  const BasisPtr b = basis_of(g, 2, 6);
  const FormFactor f = test::random_separable(g, spin::sigma_x(), 1);
  const FormFactor h = test::random_separable(g, spin::sigma_z(), 2);
  const dressing::TransformReport r = dressing::verify_transforms(b, f, h);
  EXPECT_TRUE(r.skipped);
  EXPECT_FALSE(r.reason.empty());
  EXPECT_TRUE(dressing::verify_continuity(b, f, h).skipped);
}

TEST(Transforms, UnsafeTruncationIsRejected) {
  const GridPtr g = test::grid_of({{1.0, 1.0}}, 0.5);
  const BasisPtr b = basis_of(g, 1, 6);
  const FormFactor f = FormFactor::separable(g, std::vector<double>{3.0}, spin::identity(1));
  EXPECT_THROW(dressing::verify_transforms(b, f, f), ParameterError);
}

TEST(Continuity, EqualFieldsAndSmallField) {
  const GridPtr g = test::small_grid(2);
  const BasisPtr b = basis_of(g, 2, 12);
  const FormFactor f = test::random_separable(g, spin::sigma_x(), 6, 0.4);
  const dressing::ContinuityReport same = dressing::verify_continuity(b, f, f, 50, 1);
  EXPECT_EQ(same.vector_ratio, 0.0);
  EXPECT_EQ(same.theta0_ratio, 0.0);
  const dressing::ContinuityReport zero = dressing::verify_continuity(b, f, FormFactor::zero(g, 2), 100, 2);
  EXPECT_TRUE(zero.pass());
  EXPECT_LE(zero.vector_ratio, 1.0);
  EXPECT_LE(zero.theta1_ratio, 1.0);
}

TEST(Continuity, ComplexFieldsUseRotatedField) {
  // For complex profiles only the form with phi(i(F-G)) is a bound.
  const GridPtr g = test::small_grid(2);
  const BasisPtr b = basis_of(g, 2, 12);
  const SpinMatrix n = spin::sigma_x() + cplx(0.0, 0.5) * spin::identity(2);
  double worst = 0.0, worst_literal = 0.0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const FormFactor f = test::random_separable(g, n, seed, 0.4);
    const FormFactor h = test::random_separable(g, n, seed + 20, 0.4);
    const dressing::ContinuityReport r = dressing::verify_continuity(b, f, h, 100, seed);
    EXPECT_TRUE(r.pass()) << seed;
    worst = std::max(worst, r.vector_ratio);
    worst_literal = std::max(worst_literal, r.vector_ratio_literal);
  }
  EXPECT_LE(worst, 1.0 + 1e-9);
  EXPECT_GT(worst_literal, 1.0);
}

TEST(Continuity, StrongContinuityAlongHalvingSequence) {
  const GridPtr g = test::small_grid(2);
  const BasisPtr b = basis_of(g, 2, 12);
  const FormFactor f = test::random_separable(g, spin::sigma_x(), 8, 0.4);
  const FormFactor d = test::random_separable(g, spin::sigma_x(), 9, 0.4);
  const Operator w = dressing::weyl_operator(b, f);
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(b->size()));
  psi.head(static_cast<Eigen::Index>(b->states_up_to(2))) = random_matrix(b->states_up_to(2), 1, 4).col(0);
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 8; ++k) {
    const FormFactor fn = f + d * cplx(std::pow(0.5, k));
    const double dist = (dressing::weyl_operator(b, fn).apply(psi) - w.apply(psi)).norm();
    EXPECT_LT(dist, prev);
    prev = dist;
  }
  EXPECT_LT(prev, 0.01 * psi.norm());
}

}  // namespace
}  // namespace sbren
