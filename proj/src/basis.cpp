#include "stark/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace stark {

std::uint64_t ProductBasis::key(std::span<const Level> levels) const {
  std::uint64_t k = 0;
  const auto base = static_cast<std::uint64_t>(n_levels());
  for (Level l : levels) k = k * base + l;
  return k;
}

std::optional<Index> ProductBasis::index_of_key(std::uint64_t key) const {
  auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return std::nullopt;
  return static_cast<Index>(it - keys_.begin());
}

Eigen::MatrixXd ProductBasis::population_matrix() const {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(dim(), n_clusters_);
  const double w = 1.0 / n_atoms_;
  for (Index i = 0; i < dim(); ++i)
    for (int a = 0; a < n_atoms_; ++a) f(i, cluster_slot(i, a)) += w;
  return f;
}

Eigen::VectorXd ProductBasis::cluster_occupancy() const {
  Eigen::VectorXd occ = Eigen::VectorXd::Zero(n_clusters_);
  for (Index i = 0; i < dim(); ++i)
    for (int a = 0; a < n_atoms_; ++a) occ[cluster_slot(i, a)] += 1.0;
  return occ;
}

double default_reference_energy(const StarkManifold& manifold, int n_atoms) {
  double mean = 0.0;
  for (int s = 0; s < manifold.n_sublevels(); ++s) mean += manifold.energy(LevelId{0, s});
  return n_atoms * mean / manifold.n_sublevels();
}

ProductBasis enumerate_basis(const StarkManifold& manifold, int n_atoms, double reference,
                             double window, Index max_dim) {
  if (n_atoms < 1) throw InputError("need at least one atom");
  if (!(window > 0.0)) throw InputError("truncation window must be > 0");
  if (!std::isfinite(reference)) throw InputError("reference energy must be finite");

  const int L = manifold.n_levels();
  if (L > std::numeric_limits<ProductBasis::Level>::max())
    throw InputError("too many levels per atom");
  if (n_atoms * std::log2(static_cast<double>(L)) >= 63.0)
    throw InputError("product-state keys would overflow 64 bits");

  ProductBasis b;
  b.n_atoms_ = n_atoms;
  b.n_clusters_ = manifold.n_clusters();
  b.reference_ = reference;
  b.window_ = window;
  b.level_slot_.resize(L);
  for (int l = 0; l < L; ++l) b.level_slot_[l] = manifold.cluster_slot(l);

  const Eigen::VectorXd& e = manifold.energies();
  const double emin = e.minCoeff();
  const double emax = e.maxCoeff();

  std::vector<ProductBasis::Level> tuple(n_atoms, 0);
  std::vector<double> energies;
  // Depth-first over atoms; the remaining atoms can add at most
  // [(N-k) emin, (N-k) emax], which prunes hopeless prefixes.
  auto visit = [&](auto&& self, int atom, double partial) -> void {
    const int rest = n_atoms - atom;
    if (partial + rest * emax < reference - window || partial + rest * emin > reference + window)
      return;
    if (atom == n_atoms) {
      if (std::abs(partial - reference) <= window) {
        if (static_cast<Index>(b.keys_.size()) >= max_dim)
          throw InputError("basis dimension exceeds the cap of " + std::to_string(max_dim));
        b.levels_.insert(b.levels_.end(), tuple.begin(), tuple.end());
        b.keys_.push_back(b.key(tuple));
        energies.push_back(partial);
      }
      return;
    }
    for (int l = 0; l < L; ++l) {
      tuple[atom] = static_cast<ProductBasis::Level>(l);
      self(self, atom + 1, partial + e[l]);
    }
  };
  visit(visit, 0, 0.0);

  // partial is accumulated left to right from 0.0, the same order any
  // caller summing a tuple's level energies would use.
  b.energies_ = Eigen::Map<const Eigen::VectorXd>(energies.data(),
                                                  static_cast<Index>(energies.size()));
  return b;
}

ClusterPopulations measure_populations(const ProductBasis& basis, const StateVector& psi) {
  if (psi.size() != basis.dim())
    throw InputError("state dimension " + std::to_string(psi.size()) +
                     " does not match basis dimension " + std::to_string(basis.dim()));
  ClusterPopulations p = ClusterPopulations::Zero(basis.n_clusters());
  for (Index i = 0; i < basis.dim(); ++i) {
    const double w = std::norm(psi[i]);
    for (int a = 0; a < basis.n_atoms(); ++a) p[basis.cluster_slot(i, a)] += w;
  }
  return p / basis.n_atoms();
}

StateVector initial_state(const ProductBasis& basis) {
  StateVector psi = StateVector::Zero(basis.dim());
  const int center = basis.half_width();
  Index count = 0;
  for (Index i = 0; i < basis.dim(); ++i) {
    bool all = true;
    for (int a = 0; a < basis.n_atoms() && all; ++a) all = basis.cluster_slot(i, a) == center;
    if (all) {
      psi[i] = 1.0;
      ++count;
    }
  }
  if (count == 0) throw InputError("basis holds no state with every atom in cluster 0");
  return psi / std::sqrt(static_cast<double>(count));
}

}  // namespace stark
