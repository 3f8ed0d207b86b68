#include "stark/basis.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace stark;
namespace tor = testing_oracle;

namespace {

ManifoldConfig ladder(int clusters, std::vector<double> offsets, double anharmonicity = 0.0) {
  ManifoldConfig c;
  c.n_clusters = clusters;
  c.intra_offsets = std::move(offsets);
  c.anharmonicity = anharmonicity;
  return c;
}

std::vector<tor::Tuple> tuples(const ProductBasis& b) {
  std::vector<tor::Tuple> out;
  for (Index i = 0; i < b.dim(); ++i) out.push_back(tor::to_tuple(b, i));
  return out;
}

}  // namespace

TEST(Basis, SingleAtomFullManifold) {
  const auto m = build_manifold(ManifoldConfig{});
  const auto b = enumerate_basis(m, 1, 0.0, std::numeric_limits<double>::infinity());
  EXPECT_EQ(b.dim(), 52);
}

TEST(Basis, TwoAtomThreeClusterWindow) {
  const auto cfg = ladder(3, {0.0});
  const auto m = build_manifold(cfg);
  const auto b = enumerate_basis(m, 2, 0.0, 0.5 * cfg.cluster_spacing);
  ASSERT_EQ(b.dim(), 3);
  // Level index 0, 1, 2 is cluster -1, 0, +1.
  EXPECT_EQ(tuples(b), (std::vector<tor::Tuple>{{0, 2}, {1, 1}, {2, 0}}));
}

TEST(Basis, MatchesBruteForceEnumeration) {
  const double w = mhz_to_rad_per_us(530.0);
  struct Case {
    ManifoldConfig cfg;
    int atoms;
    double window;
  };
  const std::vector<Case> cases = {
      {ManifoldConfig{}, 2, w},
      {ManifoldConfig{}, 2, 0.5 * w},
      {ManifoldConfig{}, 2, 3.7 * w},
      {ladder(5, {0.0, mhz_to_rad_per_us(40.0)}, mhz_to_rad_per_us(1.0)), 3, 0.5 * w},
      {ladder(5, {0.0, mhz_to_rad_per_us(40.0)}, mhz_to_rad_per_us(1.0)), 3, 1.2 * w},
      {ladder(3, {0.0, mhz_to_rad_per_us(13.0)}), 4, 0.5 * w},
      {ladder(7, {0.0, mhz_to_rad_per_us(40.0)}, mhz_to_rad_per_us(1.0)), 3, 0.5 * w},
      {ladder(7, {0.0}, mhz_to_rad_per_us(2.0)), 4, 2.0 * w},
  };
  for (const auto& c : cases) {
    const auto m = build_manifold(c.cfg);
    const double ref = default_reference_energy(m, c.atoms);
    const auto b = enumerate_basis(m, c.atoms, ref, c.window);
    const auto oracle = tor::brute_force_basis(c.cfg, c.atoms, ref, c.window);
    ASSERT_EQ(tuples(b), oracle);
    for (Index i = 0; i < b.dim(); ++i)
      EXPECT_NEAR(b.energy(i), tor::tuple_energy(c.cfg, oracle[i]), 1e-9);
  }
}

TEST(Basis, IndexMapIsBijection) {
  const auto m = build_manifold(ladder(5, {0.0, 1.0, 2.0}));
  const auto b = enumerate_basis(m, 3, default_reference_energy(m, 3), m.cluster_spacing());
  for (Index i = 0; i < b.dim(); ++i) {
    const auto idx = b.index_of(b.state(i));
    ASSERT_TRUE(idx.has_value());
    EXPECT_EQ(*idx, i);
  }
  const std::vector<ProductBasis::Level> far = {0, 0, 0};
  EXPECT_FALSE(b.index_of(far).has_value());
}

TEST(Basis, WindowMembershipAndEnergySum) {
  const auto m = build_manifold(ManifoldConfig{});
  const double ref = default_reference_energy(m, 3);
  const auto b = enumerate_basis(m, 3, ref, 0.5 * m.cluster_spacing());
  for (Index i = 0; i < b.dim(); ++i) {
    double e = 0.0;
    for (auto l : b.state(i)) e += m.energy(static_cast<int>(l));
    EXPECT_NEAR(b.energy(i), e, 1e-12 * std::abs(e) + 1e-12);
    EXPECT_LE(std::abs(b.energy(i) - ref), b.window());
  }
}

TEST(Basis, ReenumerationBitIdentical) {
  const auto m = build_manifold(ManifoldConfig{});
  const double ref = default_reference_energy(m, 3);
  const auto a = enumerate_basis(m, 3, ref, m.cluster_spacing());
  const auto b = enumerate_basis(m, 3, ref, m.cluster_spacing());
  ASSERT_EQ(a.dim(), b.dim());
  EXPECT_EQ(a.energies(), b.energies());
  for (Index i = 0; i < a.dim(); ++i)
    EXPECT_TRUE(std::equal(a.state(i).begin(), a.state(i).end(), b.state(i).begin()));
}

TEST(Basis, DimensionCap) {
  const auto m = build_manifold(ManifoldConfig{});
  EXPECT_THROW(enumerate_basis(m, 3, 0.0, 1e9, 1000), InputError);
}

TEST(Basis, RejectsBadWindow) {
  const auto m = build_manifold(ManifoldConfig{});
  EXPECT_THROW(enumerate_basis(m, 2, 0.0, 0.0), InputError);
  EXPECT_THROW(enumerate_basis(m, 2, std::nan(""), 1.0), InputError);
}

TEST(Basis, DefaultReferenceIsInitialSupportMean) {
  const ManifoldConfig cfg;
  const auto m = build_manifold(cfg);
  double mean = 0.0;
  for (double o : cfg.intra_offsets) mean += o;
  mean /= static_cast<double>(cfg.intra_offsets.size());
  EXPECT_NEAR(default_reference_energy(m, 4), 4.0 * mean, 1e-9);
}

TEST(Basis, FullFourAtomDimension) {
  const auto m = build_manifold(ManifoldConfig{});
  const auto b = enumerate_basis(m, 4, default_reference_energy(m, 4), 0.5 * m.cluster_spacing());
  EXPECT_GE(b.dim(), 376064 / 2);
  EXPECT_LE(b.dim(), 376064 * 2);
  RecordProperty("dim", std::to_string(b.dim()));
}

class Populations : public ::testing::Test {
protected:
  ManifoldConfig cfg = ladder(3, {0.0});
  StarkManifold m = build_manifold(cfg);
  ProductBasis b = enumerate_basis(m, 2, 0.0, 0.5 * cfg.cluster_spacing);
};

TEST_F(Populations, AllAtomsInCenterCluster) {
  StateVector psi = StateVector::Zero(3);
  psi[1] = 1.0;
  const auto p = measure_populations(b, psi);
  EXPECT_DOUBLE_EQ(p[1], 1.0);
  EXPECT_DOUBLE_EQ(p[0], 0.0);
  EXPECT_DOUBLE_EQ(p[2], 0.0);
}

TEST_F(Populations, SymmetricPair) {
  StateVector psi = StateVector::Zero(3);
  psi[0] = psi[2] = std::sqrt(0.5);
  const auto p = measure_populations(b, psi);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[2], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.0, 1e-15);
}

TEST_F(Populations, RandomStateMatchesTally) {
  Rng rng = make_rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    StateVector psi(3);
    for (auto& a : psi) a = Complex(uniform01(rng) - 0.5, uniform01(rng) - 0.5);
    psi.normalize();
    const Eigen::VectorXd expected =
        tor::cluster_fractions(cfg, b).transpose() * psi.cwiseAbs2();
    const auto p = measure_populations(b, psi);
    EXPECT_LT((p - expected).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
  }
}

TEST_F(Populations, DimensionMismatch) {
  EXPECT_THROW(measure_populations(b, StateVector::Zero(4)), InputError);
}

TEST(InitialState, OneAtom) {
  const auto m = build_manifold(ManifoldConfig{});
  const auto b = enumerate_basis(m, 1, 0.0, 1e9);
  const auto psi = initial_state(b);
  int support = 0;
  for (Index i = 0; i < b.dim(); ++i) {
    if (b.cluster_slot(i, 0) == 6) {
      EXPECT_DOUBLE_EQ(psi[i].real(), 0.5);
      ++support;
    } else {
      EXPECT_EQ(psi[i], Complex(0.0));
    }
  }
  EXPECT_EQ(support, 4);
}

TEST(InitialState, TwoAtoms) {
  const auto m = build_manifold(ManifoldConfig{});
  const auto b = enumerate_basis(m, 2, default_reference_energy(m, 2), m.cluster_spacing());
  const auto psi = initial_state(b);
  int support = 0;
  for (Index i = 0; i < b.dim(); ++i) {
    if (psi[i] != Complex(0.0)) {
      EXPECT_DOUBLE_EQ(psi[i].real(), 0.25);
      EXPECT_EQ(psi[i].imag(), 0.0);
      ++support;
    }
  }
  EXPECT_EQ(support, 16);
  const auto p = measure_populations(b, psi);
  EXPECT_NEAR(p[6], 1.0, 1e-15);
}
