#include "stark/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace stark {

double AtomGeometry::min_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_atoms(); ++i)
    for (int j = i + 1; j < n_atoms(); ++j) best = std::min(best, distance(i, j));
  return best;
}

double AtomGeometry::mean_pair_distance() const {
  double sum = 0.0;
  int pairs = 0;
  for (int i = 0; i < n_atoms(); ++i)
    for (int j = i + 1; j < n_atoms(); ++j, ++pairs) sum += distance(i, j);
  return pairs ? sum / pairs : 0.0;
}

double AtomGeometry::mean_nearest_neighbor_distance() const {
  if (n_atoms() < 2) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < n_atoms(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_atoms(); ++j)
      if (j != i) best = std::min(best, distance(i, j));
    sum += best;
  }
  return sum / n_atoms();
}

double sampling_radius_um(int n_atoms, double density_cm3) {
  const double density_um3 = density_cm3 * 1e-12;
  const double volume = n_atoms / density_um3;
  return std::cbrt(3.0 * volume / (4.0 * std::numbers::pi));
}

AtomGeometry make_geometry(Eigen::Matrix3Xd positions, double density_cm3, double radius_um) {
  AtomGeometry g;
  g.positions = std::move(positions);
  g.density_cm3 = density_cm3;
  g.radius_um = radius_um;
  const int n = g.n_atoms();
  g.inv_r3 = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double r = g.distance(i, j);
      if (!(r > 0.0)) throw InputError("atoms " + std::to_string(i) + " and " +
                                       std::to_string(j) + " coincide");
      g.inv_r3(i, j) = g.inv_r3(j, i) = 1.0 / (r * r * r);
    }
  }
  return g;
}

AtomGeometry sample_positions(int n_atoms, double density_cm3, double exclusion_um,
                              std::uint64_t seed, int max_attempts) {
  if (n_atoms < 1) throw InputError("need at least one atom");
  if (!(density_cm3 > 0.0) || !std::isfinite(density_cm3))
    throw InputError("density must be finite and > 0");
  if (!(exclusion_um >= 0.0)) throw InputError("exclusion radius must be >= 0");

  const double radius = sampling_radius_um(n_atoms, density_cm3);
  Rng rng = make_rng(seed, {0x6e0});
  Eigen::Matrix3Xd pos(3, n_atoms);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    for (int a = 0; a < n_atoms; ++a) {
      Eigen::Vector3d p;
      do {
        p = {2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0};
      } while (p.squaredNorm() > 1.0);
      pos.col(a) = radius * p;
    }
    bool ok = true;
    for (int i = 0; i < n_atoms && ok; ++i)
      for (int j = i + 1; j < n_atoms && ok; ++j)
        ok = (pos.col(i) - pos.col(j)).norm() >= exclusion_um && (pos.col(i) != pos.col(j));
    if (ok) return make_geometry(pos, density_cm3, radius);
  }
  throw InputError("no configuration of " + std::to_string(n_atoms) +
                   " atoms respects the exclusion radius after " +
                   std::to_string(max_attempts) + " attempts (overdense)");
}

void write_positions_csv(const AtomGeometry& geometry, std::ostream& out) {
  out << "x_um,y_um,z_um\n";
  char buf[128];
  for (int a = 0; a < geometry.n_atoms(); ++a) {
    const auto p = geometry.positions.col(a);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.x(), p.y(), p.z());
    out << buf;
  }
}

}  // namespace stark
