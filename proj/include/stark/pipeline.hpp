#pragma once

#include "stark/config.hpp"
#include "stark/dynamics.hpp"
#include "stark/kpm.hpp"
#include "stark/typicality.hpp"

namespace stark {

/// Density-independent part of a run: levels, dipoles and the basis.
struct Model {
  StarkManifold manifold;
  DipoleTable dipoles;
  ProductBasis basis;
};

Model build_model(const RunConfig& config);

/// Stable seed for a named substream of the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> ids);

AtomGeometry realization_geometry(const RunConfig& config, int density_index, int realization);

AssembledHamiltonian build_hamiltonian(const Model& model, const AtomGeometry& geometry,
                                       const RunConfig& config);

EvolveOptions evolve_options(const RunConfig& config, double spectral_radius);

struct RealizationResult {
  EvolveResult evolution;
  Equilibrium equilibrium;
  std::size_t dim = 0;
  std::size_t nnz = 0;
};

/// Assembles H for one geometry, evolves the initial state and detects
/// equilibrium.
RealizationResult run_realization(const Model& model, const RunConfig& config, int density_index,
                                  int realization);

struct ThermalRun {
  SpectralBounds bounds;
  DosEstimate dos;
  ShellSelection shell;
  double initial_energy = 0.0;  // <psi_init|H|psi_init>
  ThermalEstimate estimate;
};

/// Spectral bounds, KPM density of states, middle-fraction shell and the
/// typicality estimate for one Hamiltonian.
ThermalRun run_thermal(const Model& model, const SparseOperator<double>& H, const RunConfig& config,
                       int density_index, double lower_fraction, double upper_fraction);

struct SweepRow {
  double density_cm3 = 0.0;
  ClusterPopulations mean;
  Eigen::VectorXd stderr_mean;
  int realizations = 0;
  int equilibrated = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<int> thermal_density_indices;
  std::vector<ThermalRun> thermal;
};

/// Equilibrium populations averaged over realizations at every density, plus
/// the thermal prediction (highest density only unless
/// sweep_thermal_all_densities is set). Realizations run on config.workers
/// threads.
SweepResult run_density_sweep(const Model& model, const RunConfig& config);

}  // namespace stark
