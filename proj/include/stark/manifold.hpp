#pragma once

#include "stark/common.hpp"

#include <compare>
#include <filesystem>
#include <vector>

namespace stark {

/// A single Stark level: cluster label in [-half_width, half_width] and
/// sublevel index within the cluster.
struct LevelId {
  int cluster = 0;
  int sublevel = 0;
  auto operator<=>(const LevelId&) const = default;
};

struct ManifoldConfig {
  double cluster_spacing = mhz_to_rad_per_us(530.0);  // rad/us
  double anharmonicity = mhz_to_rad_per_us(1.0);      // rad/us
  std::vector<double> intra_offsets = {0.0, mhz_to_rad_per_us(40.0 / 3.0),
                                       mhz_to_rad_per_us(80.0 / 3.0),
                                       mhz_to_rad_per_us(40.0)};
  int n_clusters = 13;  // odd, centered on label 0
  /// Upper bound on (offset span) / cluster_spacing; must lie in (0, 1).
  double max_offset_ratio = 0.5;
};

/// Nearly harmonic ladder of clusters. Level energy is
/// c * spacing + anharmonicity * c^2 + intra_offsets[s].
class StarkManifold {
public:
  int n_clusters() const { return n_clusters_; }
  int n_sublevels() const { return static_cast<int>(offsets_.size()); }
  int n_levels() const { return n_clusters_ * n_sublevels(); }
  int half_width() const { return (n_clusters_ - 1) / 2; }

  double cluster_spacing() const { return spacing_; }
  double anharmonicity() const { return anharmonicity_; }
  const std::vector<double>& intra_offsets() const { return offsets_; }

  /// Levels are indexed lexicographically by (cluster, sublevel).
  int index(LevelId id) const;
  LevelId level(int index) const;
  bool contains(LevelId id) const;

  /// Position of a level's cluster in [0, n_clusters).
  int cluster_slot(int index) const { return index / n_sublevels(); }

  double energy(LevelId id) const { return energies_[index(id)]; }
  double energy(int index) const { return energies_[index]; }
  const Eigen::VectorXd& energies() const { return energies_; }

private:
  friend StarkManifold build_manifold(const ManifoldConfig& config);

  int n_clusters_ = 0;
  double spacing_ = 0.0;
  double anharmonicity_ = 0.0;
  std::vector<double> offsets_;
  Eigen::VectorXd energies_;
};

/// Validates `config` and tabulates all level energies. Throws InputError.
StarkManifold build_manifold(const ManifoldConfig& config);

struct DipoleConfig {
  /// Inter-cluster dipole magnitude in sqrt((rad/us) um^3); d_a d_b / r^3 is a
  /// coupling in rad/us.
  double inter_strength = 0.0;
  /// Intra-cluster to inter-cluster magnitude ratio.
  double ratio = 10.0;
  /// Magnitudes are drawn uniformly from base * [1 - spread, 1 + spread].
  double spread = 0.5;
  bool random_signs = true;
};

/// Symmetric transition-dipole table over the levels of one manifold.
/// Nonzero entries only connect levels in the same or adjacent clusters.
class DipoleTable {
public:
  DipoleTable() = default;

  /// Validates symmetry, zero diagonal and the |dcluster| <= 1 pattern.
  DipoleTable(const StarkManifold& manifold, Eigen::MatrixXd dipoles);

  int n_levels() const { return static_cast<int>(d_.rows()); }
  double operator()(int a, int b) const { return d_(a, b); }
  const Eigen::MatrixXd& matrix() const { return d_; }

  struct Transition {
    int target;
    double dipole;
  };
  /// Nonzero transitions out of `level`, ascending by target.
  const std::vector<Transition>& transitions(int level) const { return transitions_[level]; }

private:
  Eigen::MatrixXd d_;
  std::vector<std::vector<Transition>> transitions_;
};

/// Synthetic table, deterministic for a fixed seed. Throws InputError.
DipoleTable build_dipole_table(const StarkManifold& manifold, const DipoleConfig& config,
                               std::uint64_t seed);

/// Reads an n_levels x n_levels comma-separated matrix.
DipoleTable load_dipole_csv(const StarkManifold& manifold, const std::filesystem::path& path);

}  // namespace stark
