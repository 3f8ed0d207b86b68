#include "stark/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace stark {

int StarkManifold::index(LevelId id) const {
  if (!contains(id)) throw InputError("level (" + std::to_string(id.cluster) + ", " +
                                      std::to_string(id.sublevel) + ") outside the manifold");
  return (id.cluster + half_width()) * n_sublevels() + id.sublevel;
}

LevelId StarkManifold::level(int index) const {
  return {index / n_sublevels() - half_width(), index % n_sublevels()};
}

bool StarkManifold::contains(LevelId id) const {
  return std::abs(id.cluster) <= half_width() && id.sublevel >= 0 &&
         id.sublevel < n_sublevels();
}

StarkManifold build_manifold(const ManifoldConfig& config) {
  const double w = config.cluster_spacing;
  const double a = config.anharmonicity;
  if (!std::isfinite(w) || w <= 0.0) throw InputError("cluster spacing must be finite and > 0");
  if (!std::isfinite(a)) throw InputError("anharmonicity must be finite");
  if (config.n_clusters < 1 || config.n_clusters % 2 == 0)
    throw InputError("number of clusters must be odd and positive");
  if (config.intra_offsets.empty()) throw InputError("at least one sublevel offset required");
  if (!(config.max_offset_ratio > 0.0 && config.max_offset_ratio < 1.0))
    throw InputError("max offset ratio must lie in (0, 1)");

  const int half = (config.n_clusters - 1) / 2;
  if (std::abs(a) * half * half >= w)
    throw InputError("anharmonic shift at the outermost cluster exceeds one spacing");

  const auto& off = config.intra_offsets;
  for (std::size_t s = 0; s < off.size(); ++s) {
    if (!std::isfinite(off[s])) throw InputError("sublevel offsets must be finite");
    if (s > 0 && off[s] < off[s - 1]) throw InputError("sublevel offsets must be non-decreasing");
  }
  if (off.back() - off.front() >= config.max_offset_ratio * w)
    throw InputError("sublevel offset span too large relative to the cluster spacing");

  StarkManifold m;
  m.n_clusters_ = config.n_clusters;
  m.spacing_ = w;
  m.anharmonicity_ = a;
  m.offsets_ = off;
  m.energies_.resize(m.n_levels());
  for (int i = 0; i < m.n_levels(); ++i) {
    const auto [c, s] = m.level(i);
    m.energies_[i] = c * w + a * c * c + off[s];
  }
  for (int c = -half; c < half; ++c) {
    const double top = m.energy(LevelId{c, m.n_sublevels() - 1});
    const double bottom = m.energy(LevelId{c + 1, 0});
    if (top >= bottom) throw InputError("adjacent clusters overlap");
  }
  return m;
}

DipoleTable::DipoleTable(const StarkManifold& manifold, Eigen::MatrixXd dipoles)
    : d_(std::move(dipoles)) {
  const int n = manifold.n_levels();
  if (d_.rows() != n || d_.cols() != n)
    throw InputError("dipole table must be " + std::to_string(n) + "x" + std::to_string(n));
  if (!d_.allFinite()) throw InputError("dipole table contains non-finite entries");
  for (int a = 0; a < n; ++a) {
    if (d_(a, a) != 0.0) throw InputError("dipole table diagonal must be zero");
    for (int b = a + 1; b < n; ++b) {
      if (d_(a, b) != d_(b, a))
        throw InputError("dipole table is not symmetric at (" + std::to_string(a) + ", " +
                         std::to_string(b) + ")");
      const int dc = std::abs(manifold.cluster_slot(a) - manifold.cluster_slot(b));
      if (dc > 1 && d_(a, b) != 0.0)
        throw InputError("dipole table couples levels " + std::to_string(a) + " and " +
                         std::to_string(b) + " across more than one cluster");
    }
  }
  transitions_.resize(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (d_(a, b) != 0.0) transitions_[a].push_back({b, d_(a, b)});
}

DipoleTable build_dipole_table(const StarkManifold& manifold, const DipoleConfig& config,
                               std::uint64_t seed) {
  if (!(config.inter_strength >= 0.0) || !std::isfinite(config.inter_strength))
    throw InputError("inter-cluster dipole strength must be finite and >= 0");
  if (!(config.ratio > 0.0) || !std::isfinite(config.ratio))
    throw InputError("dipole ratio must be finite and > 0");
  if (!(config.spread >= 0.0 && config.spread < 1.0))
    throw InputError("dipole spread must lie in [0, 1)");

  const int n = manifold.n_levels();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  Rng rng = make_rng(seed, {0xd1b0});
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const int dc = std::abs(manifold.cluster_slot(a) - manifold.cluster_slot(b));
      if (dc > 1) continue;
      const double base = dc == 0 ? config.ratio * config.inter_strength : config.inter_strength;
      // Draws are consumed for every allowed pair so the pattern of
      // magnitudes does not depend on the spread or sign settings.
      const double u = uniform01(rng);
      const double v = uniform01(rng);
      double value = base * (1.0 + config.spread * (2.0 * u - 1.0));
      if (config.random_signs && v < 0.5) value = -value;
      d(a, b) = value;
      d(b, a) = value;
    }
  }
  return DipoleTable(manifold, std::move(d));
}

DipoleTable load_dipole_csv(const StarkManifold& manifold, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dipole matrix " + path.string());
  const int n = manifold.n_levels();
  Eigen::MatrixXd d(n, n);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (row >= n) throw InputError("dipole matrix has more than " + std::to_string(n) + " rows");
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= n) throw InputError("dipole matrix row " + std::to_string(row) + " too long");
      try {
        d(row, col++) = std::stod(cell);
      } catch (const std::exception&) {
        throw InputError("bad number '" + cell + "' in dipole matrix");
      }
    }
    if (col != n) throw InputError("dipole matrix row " + std::to_string(row) + " too short");
    ++row;
  }
  if (row != n) throw InputError("dipole matrix has " + std::to_string(row) + " rows");
  return DipoleTable(manifold, std::move(d));
}

}  // namespace stark
