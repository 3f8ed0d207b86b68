#include "stark/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace stark;

namespace {

SparseOperator<Complex> random_hermitian(Index n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<Eigen::Triplet<Complex>> t;
  for (Index i = 0; i < n; ++i) {
    t.emplace_back(i, i, Complex(10.0 * uniform01(rng) - 5.0, 0.0));
    for (Index j = i + 1; j < n; ++j) {
      if (uniform01(rng) > 0.3) continue;
      const Complex v(uniform01(rng) - 0.5, uniform01(rng) - 0.5);
      t.emplace_back(i, j, v);
      t.emplace_back(j, i, std::conj(v));
    }
  }
  return SparseOperator<Complex>::from_triplets(n, t);
}

// One atom on a three-cluster ladder of one sublevel: basis state k is cluster k - 1.
ProductBasis three_level_basis() {
  ManifoldConfig cfg;
  cfg.n_clusters = 3;
  cfg.intra_offsets = {0.0};
  return enumerate_basis(build_manifold(cfg), 1, 0.0, 1e9);
}

}  // namespace

TEST(ExactDiagonalize, Diagonal) {
  const auto H = SparseOperator<double>::from_triplets(3, {{0, 0, 2.0}, {1, 1, -1.0}, {2, 2, 0.5}});
  const auto eig = exact_diagonalize(H);
  EXPECT_EQ(eig.values, Eigen::Vector3d(-1.0, 0.5, 2.0));
}

TEST(ExactDiagonalize, TwoByTwo) {
  const auto H = SparseOperator<double>::from_triplets(2, {{0, 1, 3.0}, {1, 0, 3.0}});
  const auto eig = exact_diagonalize(H);
  EXPECT_NEAR(eig.values[0], -3.0, 1e-14);
  EXPECT_NEAR(eig.values[1], 3.0, 1e-14);
  EXPECT_NEAR(std::abs(eig.vectors(0, 1)), std::sqrt(0.5), 1e-14);
}

TEST(ExactDiagonalize, ResidualAndOrthonormality) {
  const auto H = random_hermitian(60, 3);
  const auto eig = exact_diagonalize(H);
  const Eigen::MatrixXcd D = H.to_dense();
  const Eigen::MatrixXcd& V = eig.vectors;
  const double scale = D.norm();
  EXPECT_LT((D * V - V * eig.values.asDiagonal()).norm(), 1e-12 * scale);
  EXPECT_LT((V.adjoint() * V - Eigen::MatrixXcd::Identity(60, 60)).norm(), 1e-12);
  for (Index k = 1; k < 60; ++k) EXPECT_LE(eig.values[k - 1], eig.values[k]);
}

TEST(ExactDiagonalize, DimensionCap) {
  const auto H = random_hermitian(20, 1);
  EXPECT_THROW(exact_diagonalize(H, 10), InputError);
}

TEST(Microcanonical, SingleEigenstate) {
  const auto b = three_level_basis();
  const auto H = SparseOperator<double>::from_triplets(3, {{0, 0, -5.0}, {1, 1, 0.0}, {2, 2, 5.0}});
  const auto p = microcanonical_average(exact_diagonalize(H), {5.0, 0.1}, b);
  EXPECT_EQ(p, Eigen::Vector3d(0.0, 0.0, 1.0));
}

TEST(Microcanonical, FullSpectrumIsUniformTally) {
  // Any complete eigenbasis averages to the uniform tally over basis states.
  const auto b = three_level_basis();
  const auto H = SparseOperator<double>::from_triplets(
      3, {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 2.0}, {2, 1, 2.0}, {0, 0, 0.3}});
  const auto p = microcanonical_average(exact_diagonalize(H), {0.0, 100.0}, b);
  for (Index c = 0; c < 3; ++c) EXPECT_NEAR(p[c], 1.0 / 3.0, 1e-14);
}

TEST(Microcanonical, EmptyShellThrows) {
  const auto b = three_level_basis();
  const auto H = SparseOperator<double>::from_triplets(3, {{0, 0, -5.0}, {1, 1, 0.0}, {2, 2, 5.0}});
  EXPECT_THROW(microcanonical_average(exact_diagonalize(H), {2.5, 0.5}, b), InputError);
}

TEST(Counting, ClosedInterval) {
  const auto H = SparseOperator<double>::from_triplets(3, {{0, 0, -1.0}, {1, 1, 0.0}, {2, 2, 1.0}});
  const auto eig = exact_diagonalize(H);
  EXPECT_EQ(count_in_interval(eig, -1.0, 1.0), 3);
  EXPECT_EQ(count_in_interval(eig, -0.5, 1.0), 2);
  EXPECT_EQ(count_in_interval(eig, 0.1, 0.9), 0);
}

TEST(ExactEvolve, IdentityAtTimeZero) {
  const auto H = random_hermitian(30, 5);
  const auto eig = exact_diagonalize(H);
  StateVector psi = StateVector::Zero(30);
  psi[4] = Complex(0.6, 0.8);
  EXPECT_LT((exact_evolve(eig, psi, 0.0) - psi).norm(), 1e-13);
}

TEST(ExactEvolve, EigenstateAcquiresPhase) {
  const auto H = random_hermitian(30, 6);
  const auto eig = exact_diagonalize(H);
  const StateVector phi = eig.vectors.col(7);
  const double t = 0.37;
  const StateVector expected = std::polar(1.0, -eig.values[7] * t) * phi;
  EXPECT_LT((exact_evolve(eig, phi, t) - expected).norm(), 1e-12);
}

TEST(ExactEvolve, Unitary) {
  const auto H = random_hermitian(40, 7);
  const auto eig = exact_diagonalize(H);
  StateVector psi = StateVector::Ones(40) / std::sqrt(40.0);
  const auto out = exact_evolve(eig, psi, 2.5);
  EXPECT_NEAR(out.norm(), 1.0, 1e-13);
  // Composition: U(a) U(b) = U(a + b).
  EXPECT_LT((exact_evolve(eig, exact_evolve(eig, psi, 1.0), 1.5) - out).norm(), 1e-12);
}

TEST(ExactFilter, WideShellIsIdentity) {
  const auto H = random_hermitian(30, 8);
  const auto eig = exact_diagonalize(H);
  StateVector psi = StateVector::Ones(30) / std::sqrt(30.0);
  EXPECT_GE(fidelity(exact_filter(eig, psi, {0.0, 1e8}), psi), 1.0 - 1e-12);
}

TEST(ExactFilter, NarrowShellSelectsNearestEigenstate) {
  const auto H = random_hermitian(30, 9);
  const auto eig = exact_diagonalize(H);
  StateVector psi = StateVector::Ones(30) / std::sqrt(30.0);
  const StateVector phi = eig.vectors.col(12);
  const double gap = std::min(eig.values[13] - eig.values[12], eig.values[12] - eig.values[11]);
  const auto out = exact_filter(eig, psi, {eig.values[12], 0.05 * gap});
  EXPECT_GE(fidelity(out, phi), 1.0 - 1e-10);
}

TEST(Fidelity, ScaleInvariant) {
  StateVector a(2), b(2);
  a << 1.0, Complex(0.0, 1.0);
  b = Complex(0.0, 3.0) * a;
  EXPECT_NEAR(fidelity(a, b), 1.0, 1e-15);
  b << 1.0, Complex(0.0, -1.0);
  EXPECT_NEAR(fidelity(a, b), 0.0, 1e-15);
}
