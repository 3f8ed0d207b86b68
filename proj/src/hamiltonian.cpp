#include "stark/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace stark {

namespace {

struct RowEntry {
  Index col;
  double value;
};

// Collects one row's contributions, then merges duplicates in column order.
void flush_row(std::vector<RowEntry>& row, double drop, std::vector<int>& cols,
               std::vector<double>& vals) {
  std::stable_sort(row.begin(), row.end(),
                   [](const RowEntry& a, const RowEntry& b) { return a.col < b.col; });
  for (std::size_t k = 0; k < row.size();) {
    double sum = 0.0;
    const Index col = row[k].col;
    for (; k < row.size() && row[k].col == col; ++k) sum += row[k].value;
    if (std::abs(sum) >= drop) {
      cols.push_back(static_cast<int>(col));
      vals.push_back(sum);
    }
  }
  row.clear();
}

}  // namespace

AssembledHamiltonian assemble(const StarkManifold& manifold, const DipoleTable& dipoles,
                              const AtomGeometry& geometry, const ProductBasis& basis,
                              const HamiltonianConfig& config) {
  const int N = basis.n_atoms();
  if (geometry.n_atoms() != N)
    throw InputError("geometry has " + std::to_string(geometry.n_atoms()) + " atoms, basis has " +
                     std::to_string(N));
  if (dipoles.n_levels() != manifold.n_levels() || basis.n_levels() != manifold.n_levels())
    throw InputError("dipole table, basis and manifold disagree on the number of levels");
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b)
      if (!(geometry.distance(a, b) > 0.0)) throw InputError("pair distance must be > 0");
  if (basis.dim() >= std::numeric_limits<int>::max())
    throw InputError("basis too large for 32-bit column indices");

  const Eigen::VectorXd& e = manifold.energies();
  const auto L = static_cast<std::int64_t>(manifold.n_levels());
  std::vector<std::int64_t> place(N, 1);
  for (int a = N - 2; a >= 0; --a) place[a] = place[a + 1] * L;

  struct Pair {
    int a, b;
    double inv_r3;
  };
  std::vector<Pair> pairs;
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b) pairs.push_back({a, b, geometry.inv_r3(a, b)});

  const Index dim = basis.dim();
  std::vector<int> row_ptr(dim + 1, 0);
  std::vector<int> cols;
  std::vector<double> vals;
  std::vector<RowEntry> row;
  std::vector<ProductBasis::Level> mid(N);
  AssembledHamiltonian out;

  for (Index i = 0; i < dim; ++i) {
    const auto s = basis.state(i);
    const auto key = static_cast<std::int64_t>(basis.key(s));
    const double Ei = basis.energy(i);
    row.push_back({i, Ei - basis.reference_energy()});

    for (const Pair& p : pairs) {
      const int la = s[p.a];
      const int lb = s[p.b];
      for (const auto& ta : dipoles.transitions(la)) {
        for (const auto& tb : dipoles.transitions(lb)) {
          const std::int64_t kmid =
              key + (ta.target - la) * place[p.a] + (tb.target - lb) * place[p.b];
          const double v1 = ta.dipole * tb.dipole * p.inv_r3;
          if (auto j = basis.index_of_key(static_cast<std::uint64_t>(kmid))) {
            row.push_back({*j, v1});
            ++out.two_body_couplings;
            continue;
          }
          if (!config.three_body) continue;

          // Out-of-window intermediate: second flip on a pair sharing exactly
          // one atom with the first.
          const double Em = Ei - e[la] - e[lb] + e[ta.target] + e[tb.target];
          const double den1 = Ei - Em;
          std::copy(s.begin(), s.end(), mid.begin());
          mid[p.a] = static_cast<ProductBasis::Level>(ta.target);
          mid[p.b] = static_cast<ProductBasis::Level>(tb.target);
          for (const Pair& q : pairs) {
            const bool share_a = q.a == p.a || q.b == p.a;
            const bool share_b = q.a == p.b || q.b == p.b;
            if (share_a == share_b) continue;
            const int shared = share_a ? p.a : p.b;
            const int mc = mid[q.a];
            const int md = mid[q.b];
            for (const auto& tc : dipoles.transitions(mc)) {
              for (const auto& td : dipoles.transitions(md)) {
                const int final_shared = (q.a == shared) ? tc.target : td.target;
                if (final_shared == s[shared]) continue;  // only two atoms differ
                const std::int64_t kfin =
                    kmid + (tc.target - mc) * place[q.a] + (td.target - md) * place[q.b];
                auto j = basis.index_of_key(static_cast<std::uint64_t>(kfin));
                if (!j) continue;
                const double den2 = basis.energy(*j) - Em;
                if (std::abs(den1) < config.denominator_floor ||
                    std::abs(den2) < config.denominator_floor) {
                  ++out.skipped_denominators;
                  continue;
                }
                const double v2 = tc.dipole * td.dipole * q.inv_r3;
                row.push_back({*j, 0.5 * v1 * v2 * (1.0 / den1 + 1.0 / den2)});
                ++out.three_body_paths;
              }
            }
          }
        }
      }
    }
    flush_row(row, config.drop_tolerance, cols, vals);
    row_ptr[i + 1] = static_cast<int>(cols.size());
  }

  const Eigen::Map<const Eigen::SparseMatrix<double, Eigen::RowMajor>> view(
      dim, dim, static_cast<Index>(vals.size()), row_ptr.data(), cols.data(), vals.data());
  // The constructor re-verifies Hermiticity; any asymmetry in the path
  // enumeration surfaces here as a NumericalError.
  out.op = SparseOperator<double>(SparseOperator<double>::Matrix(view), config.drop_tolerance);
  return out;
}

template <typename Scalar>
SpectralBounds spectral_bounds(const SparseOperator<Scalar>& H, const PowerIterationOptions& opt) {
  const Index n = H.dim();
  if (n == 0) throw InputError("empty operator");
  const auto [glo, ghi] = H.gershgorin();
  const double gwidth = ghi - glo;
  if (gwidth <= 0.0) return {glo, ghi};  // H is a multiple of the identity

  // Dominant eigenvalue of (shift + sign * H), which is positive semidefinite,
  // so the Rayleigh quotient increases monotonically to the spectral edge.
  auto edge = [&](double sign, double shift, std::uint64_t stream) {
    Rng rng = make_rng(opt.seed, {stream});
    StateVector v(n);
    for (Index k = 0; k < n; ++k) v[k] = Complex(uniform01(rng) - 0.5, uniform01(rng) - 0.5);
    v.normalize();
    StateVector w(n);
    double previous = -std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opt.max_iterations; ++it) {
      H.apply(v, w);
      w = shift * v + sign * w;
      const double rq = v.dot(w).real();
      const double norm = w.norm();
      if (norm == 0.0) return shift;  // v lies in the null space of a PSD matrix
      v = w / norm;
      if (it % opt.check_interval == 0) {
        if (std::abs(rq - previous) < opt.tolerance * gwidth) return rq;
        previous = rq;
      }
    }
    throw NumericalError("power iteration did not converge after " +
                         std::to_string(opt.max_iterations) + " iterations");
  };

  const double top = edge(1.0, -glo, 1) + glo;
  const double bottom = ghi - edge(-1.0, ghi, 2);
  const double margin = opt.margin * std::max(top - bottom, 1e-12 * gwidth);
  return {std::max(glo, bottom - margin), std::min(ghi, top + margin)};
}

template SpectralBounds spectral_bounds(const SparseOperator<double>&, const PowerIterationOptions&);
template SpectralBounds spectral_bounds(const SparseOperator<Complex>&,
                                        const PowerIterationOptions&);

}  // namespace stark
