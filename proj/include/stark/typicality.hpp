#pragma once

#include "stark/basis.hpp"
#include "stark/hamiltonian.hpp"

namespace stark {

/// Shell [center - half_width, center + half_width]; half_width is the
/// Delta E of the Gaussian filter exp(-(H - E0)^2 / 4 Delta E^2).
struct EnergyShell {
  double center = 0.0;
  double half_width = 0.0;
  double lower() const { return center - half_width; }
  double upper() const { return center + half_width; }
};

/// Amplitudes u e^{i theta} with u ~ U[0,1), theta ~ U[0, 2 pi), normalized.
StateVector random_state(Index dim, std::uint64_t seed, std::uint64_t stream = 0);

struct FilterResult {
  StateVector state;      // normalized
  double log_norm = 0.0;  // log of the norm the unnormalized filter would give
  std::int64_t steps = 0;
};

/// Integrates dpsi/ds = -(H - E0)^2 psi from s = 0 to 1 / (4 Delta E^2) with
/// RK4, renormalizing after each step. ds = 0 selects 0.05 / lambda^2 with
/// lambda = max(|E_min - E0|, |E_max - E0|); larger than 0.1 / lambda^2 is an
/// InputError. Throws NumericalError if the norm underflows.
template <typename Scalar>
FilterResult apply_energy_filter(const SparseOperator<Scalar>& H, const StateVector& psi,
                                 const EnergyShell& shell, const SpectralBounds& bounds,
                                 double ds = 0.0);

struct ThermalEstimate {
  ClusterPopulations mean;
  Eigen::VectorXd stderr_mean;
  int n_samples = 0;
  int failed = 0;
};

struct TypicalityOptions {
  int n_samples = 48;
  /// Stop early once every per-cluster standard error is below this value
  /// (0 disables) and at least min_samples have been drawn.
  double stop_stderr = 0.0;
  int min_samples = 8;
  double ds = 0.0;
  int workers = 1;
};

/// Mean and standard error of the populations of filtered random states.
/// Sample k always uses RNG substream k, so the estimate does not depend on
/// the worker count.
template <typename Scalar>
ThermalEstimate thermal_populations(const SparseOperator<Scalar>& H, const ProductBasis& basis,
                                    const EnergyShell& shell, const SpectralBounds& bounds,
                                    std::uint64_t seed, const TypicalityOptions& options = {});

}  // namespace stark
