#pragma once

#include "stark/common.hpp"

#include <ostream>

namespace stark {

/// Frozen atom positions (um) and the pairwise 1/r^3 prefactors (um^-3).
struct AtomGeometry {
  Eigen::Matrix3Xd positions;
  double density_cm3 = 0.0;
  double radius_um = 0.0;  // radius of the sampling sphere
  Eigen::MatrixXd inv_r3;  // symmetric, zero diagonal

  int n_atoms() const { return static_cast<int>(positions.cols()); }
  double distance(int i, int j) const { return (positions.col(i) - positions.col(j)).norm(); }
  double min_distance() const;
  double mean_pair_distance() const;
  double mean_nearest_neighbor_distance() const;
};

/// Radius of the sphere holding n_atoms at the given density (cm^-3).
double sampling_radius_um(int n_atoms, double density_cm3);

/// Builds the 1/r^3 table for explicit positions. Throws InputError on
/// coincident atoms.
AtomGeometry make_geometry(Eigen::Matrix3Xd positions, double density_cm3 = 0.0,
                           double radius_um = 0.0);

/// Uniform positions in a sphere of volume n_atoms / density, whole
/// configurations rejected until every pair is at least `exclusion_um` apart.
/// Throws InputError when `max_attempts` configurations are rejected.
AtomGeometry sample_positions(int n_atoms, double density_cm3, double exclusion_um,
                              std::uint64_t seed, int max_attempts = 100000);

/// Columns x_um, y_um, z_um.
void write_positions_csv(const AtomGeometry& geometry, std::ostream& out);

}  // namespace stark
