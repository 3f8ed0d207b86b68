#pragma once

#include "stark/manifold.hpp"

#include <optional>
#include <span>

namespace stark {

/// Energy-truncated N-atom product basis. Atoms are distinguishable; each
/// state is an N-tuple of level indices, stored in lexicographic order.
class ProductBasis {
public:
  using Level = std::uint16_t;

  Index dim() const { return static_cast<Index>(keys_.size()); }
  int n_atoms() const { return n_atoms_; }
  int n_levels() const { return static_cast<int>(level_slot_.size()); }
  int n_clusters() const { return n_clusters_; }
  int half_width() const { return (n_clusters_ - 1) / 2; }

  std::span<const Level> state(Index i) const {
    return {levels_.data() + i * n_atoms_, static_cast<std::size_t>(n_atoms_)};
  }

  /// Mixed-radix encoding of a level tuple; atom 0 is most significant.
  std::uint64_t key(std::span<const Level> levels) const;
  std::optional<Index> index_of_key(std::uint64_t key) const;
  std::optional<Index> index_of(std::span<const Level> levels) const {
    return index_of_key(key(levels));
  }

  /// Unperturbed total energy of each state (rad/us).
  const Eigen::VectorXd& energies() const { return energies_; }
  double energy(Index i) const { return energies_[i]; }
  double reference_energy() const { return reference_; }
  double window() const { return window_; }

  /// Cluster slot in [0, n_clusters) of atom `atom` in state `i`.
  int cluster_slot(Index i, int atom) const { return level_slot_[state(i)[atom]]; }
  int cluster_slot_of_level(int level) const { return level_slot_[level]; }

  /// dim x n_clusters matrix of per-state atom fractions in each cluster.
  Eigen::MatrixXd population_matrix() const;

  /// Number of atoms in each cluster summed over all states.
  Eigen::VectorXd cluster_occupancy() const;

private:
  friend ProductBasis enumerate_basis(const StarkManifold&, int, double, double, Index);

  int n_atoms_ = 0;
  int n_clusters_ = 0;
  std::vector<Level> levels_;
  std::vector<std::uint64_t> keys_;
  std::vector<int> level_slot_;
  Eigen::VectorXd energies_;
  double reference_ = 0.0;
  double window_ = 0.0;
};

/// Mean energy of the states with every atom in cluster 0.
double default_reference_energy(const StarkManifold& manifold, int n_atoms);

/// All product states with |E - reference| <= window, in lexicographic order.
/// Throws InputError when the dimension would exceed `max_dim`.
ProductBasis enumerate_basis(const StarkManifold& manifold, int n_atoms, double reference,
                             double window, Index max_dim = 5'000'000);

/// p[c] = sum_i |psi_i|^2 * (atoms of state i in cluster c) / N.
ClusterPopulations measure_populations(const ProductBasis& basis, const StateVector& psi);

/// Equal real amplitude on every state with all atoms in cluster 0.
StateVector initial_state(const ProductBasis& basis);

}  // namespace stark
