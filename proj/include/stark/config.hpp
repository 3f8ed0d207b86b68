#pragma once

#include "stark/dynamics.hpp"
#include "stark/expdata.hpp"
#include "stark/hamiltonian.hpp"
#include "stark/manifold.hpp"

#include "json.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>

namespace stark {

/// Everything a run needs. Physical quantities in the file carry their unit
/// in the key name (cluster_spacing_mhz, t_total_us, ...); fields here are
/// converted to rad/us and us.
struct RunConfig {
  ManifoldConfig manifold;
  DipoleConfig dipoles;
  double c3_inter_mhz_um3 = 20.0;
  std::string dipole_matrix_csv;

  int n_atoms = 4;
  std::vector<double> densities_cm3 = {3.0e8,  5.4e8,  9.6e8,  1.7e9,  3.1e9,
                                       5.5e9,  9.8e9,  1.45e10, 1.9e10, 2.7e10};
  int realizations = 10;
  double exclusion_um = 0.0;

  std::optional<double> window;     // rad/us; default spacing / 2
  std::optional<double> reference;  // rad/us; default mean energy of the initial support
  Index max_dim = 5'000'000;

  HamiltonianConfig hamiltonian;

  double t_total_us = 3.0;
  double dt_us = 0.0;
  TimeStepPolicy time_step;
  double sample_interval_us = 0.01;
  double eq_window_us = 0.5;
  double eq_tol = 0.005;

  int typicality_samples = 48;
  double typicality_stop_stderr = 1e-3;
  int typicality_min_samples = 8;
  double shell_lower_fraction = 1.0 / 3.0;
  double shell_upper_fraction = 2.0 / 3.0;
  bool shell_recenter = true;
  std::vector<double> shell_sweep_widths = {0.3, 0.4};
  bool sweep_thermal_all_densities = false;

  int kpm_moments = 2048;
  int kpm_vectors = 16;
  int kpm_grid = 4096;

  Index ed_max_dim = 6000;
  double oracle_tolerance = 0.02;

  std::uint64_t seed = 1;
  int workers = 1;

  // Data reduction.
  std::string data_csv;
  std::string shots_manifest;
  std::vector<double> region_edges_ghz;
  std::vector<double> couplings;  // empty: measured coupling vector
  int density_bins = 10;
  bool normalize_per_shot = true;
  double scan_min_ghz = 104.0;
  double scan_max_ghz = 112.0;
  std::string experimental_json;
  std::string predicted_json;

  double window_value() const { return window.value_or(0.5 * manifold.cluster_spacing); }

  /// Resolved configuration with file units, for provenance.
  nlohmann::ordered_json to_json() const;
};

/// Parses "key = value" lines; '#' starts a comment, lists are comma
/// separated. Unknown keys and malformed values raise InputError. Relative
/// paths resolve against `base_dir`.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Applies range checks across fields. Throws InputError.
void validate(const RunConfig& config);

}  // namespace stark
