#pragma once

#include "stark/basis.hpp"
#include "stark/geometry.hpp"
#include "stark/sparse_operator.hpp"

namespace stark {

struct HamiltonianConfig {
  /// Effective couplings between states differing in three atoms, mediated
  /// by a product state outside the truncation window.
  bool three_body = true;
  /// Paths with |E - E_m| below this floor (rad/us) are skipped and counted.
  double denominator_floor = mhz_to_rad_per_us(1.0);
  double drop_tolerance = 1e-12;
};

struct AssembledHamiltonian {
  SparseOperator<double> op;
  std::size_t two_body_couplings = 0;    // stored off-diagonal two-body contributions
  std::size_t three_body_paths = 0;      // contributing second-order paths
  std::size_t skipped_denominators = 0;  // paths dropped by the floor
};

/// Diagonal e_diag - E_ref, plus the pair exchange d[a,a'] d[b,b'] / r_ij^3
/// between states differing in exactly two atoms, plus (optionally) the
/// three-atom effective term
///   sum_m V_1m V_m2 (1/(E_1 - E_m) + 1/(E_2 - E_m)) / 2
/// over intermediates m outside the basis.
AssembledHamiltonian assemble(const StarkManifold& manifold, const DipoleTable& dipoles,
                              const AtomGeometry& geometry, const ProductBasis& basis,
                              const HamiltonianConfig& config = {});

struct SpectralBounds {
  double lower = 0.0;
  double upper = 0.0;
  double radius() const { return std::max(std::abs(lower), std::abs(upper)); }
  double width() const { return upper - lower; }
};

struct PowerIterationOptions {
  int max_iterations = 20000;
  /// Stop once the Rayleigh quotient moves by less than tolerance * width
  /// over `check_interval` iterations.
  double tolerance = 1e-7;
  int check_interval = 10;
  double margin = 0.01;  // fraction of the estimated width added on each side
  std::uint64_t seed = 0x5eed;
};

/// Bounds from power iteration on H - g_lo and g_hi - H, where [g_lo, g_hi]
/// is the Gershgorin interval, widened by the margin and clipped to the
/// Gershgorin interval. Throws NumericalError on non-convergence.
template <typename Scalar>
SpectralBounds spectral_bounds(const SparseOperator<Scalar>& H,
                               const PowerIterationOptions& options = {});

}  // namespace stark
