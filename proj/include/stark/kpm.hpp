#pragma once

#include "stark/hamiltonian.hpp"
#include "stark/typicality.hpp"

#include <optional>
#include <ostream>

namespace stark {

/// Affine map H~ = (H - shift) / scale sending the spectrum into (-1, 1).
struct ChebyshevRescale {
  double scale = 1.0;
  double shift = 0.0;

  /// scale = width / (2 - epsilon), shift = center.
  static ChebyshevRescale from_bounds(const SpectralBounds& bounds, double epsilon = 0.01);

  double to_unit(double energy) const { return (energy - shift) / scale; }
  double to_energy(double x) const { return scale * x + shift; }
};

struct ChebyshevMoments {
  ChebyshevRescale rescale;
  Eigen::VectorXd mu;  // mu_0 = 1
  int n_vectors = 0;
};

/// Stochastic estimate of mu_m = Tr T_m(H~) / dim from `n_vectors` random
/// phase vectors, using the doubling identities so M moments cost about M/2
/// products. Throws NumericalError if the recurrence grows, which means the
/// spectrum leaks outside [-1, 1].
template <typename Scalar>
ChebyshevMoments chebyshev_moments(const SparseOperator<Scalar>& H,
                                   const ChebyshevRescale& rescale, int n_moments, int n_vectors,
                                   std::uint64_t seed, int workers = 1);

/// Jackson damping factors g_0..g_{M-1}.
Eigen::VectorXd jackson_kernel(int n_moments);

/// Density of states on a grid, ascending in energy. weights[k] * density[k]
/// summed over the grid is the integral of the density.
struct DosEstimate {
  ChebyshevRescale rescale;
  Eigen::VectorXd damped_moments;
  Eigen::VectorXd energies;   // rad/us
  Eigen::VectorXd density;    // per rad/us
  Eigen::VectorXd weights;    // rad/us

  double integral() const { return weights.dot(density); }
};

/// Jackson-damped Chebyshev series evaluated on `grid_size` Chebyshev nodes.
DosEstimate dos_estimate(const ChebyshevMoments& moments, int grid_size);

struct ShellSelection {
  EnergyShell shell;
  double lower_energy = 0.0;  // CDF(lower_energy) = lower fraction
  double upper_energy = 0.0;  // CDF(upper_energy) = upper fraction
  int isotonic_corrections = 0;
};

/// Inverts the integrated density at the two fractions. The shell center is
/// the midpoint of the interval unless `recenter` supplies another energy;
/// the half-width is always half the interval.
ShellSelection select_shell(const DosEstimate& dos, double lower_fraction = 1.0 / 3.0,
                            double upper_fraction = 2.0 / 3.0,
                            std::optional<double> recenter = std::nullopt);

/// Columns E_rad_per_us, density.
void write_dos_csv(const DosEstimate& dos, std::ostream& out);

}  // namespace stark
