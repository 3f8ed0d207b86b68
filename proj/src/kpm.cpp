#include "stark/kpm.hpp"

#include <cmath>
#include <cstdio>

namespace stark {

ChebyshevRescale ChebyshevRescale::from_bounds(const SpectralBounds& bounds, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("rescale epsilon must lie in (0, 1)");
  ChebyshevRescale r;
  const double width = std::max(bounds.width(), 1e-12 * std::max(1.0, bounds.radius()));
  r.scale = width / (2.0 - epsilon);
  r.shift = 0.5 * (bounds.upper + bounds.lower);
  return r;
}

template <typename Scalar>
ChebyshevMoments chebyshev_moments(const SparseOperator<Scalar>& H,
                                   const ChebyshevRescale& rescale, int n_moments, int n_vectors,
                                   std::uint64_t seed, int workers) {
  if (n_moments < 1) throw InputError("need at least one Chebyshev moment");
  if (n_vectors < 1) throw InputError("need at least one random vector");
  if (!(rescale.scale > 0.0)) throw InputError("Chebyshev rescale must be positive");

  const Index n = H.dim();
  const int half = (n_moments + 1) / 2;
  std::vector<Eigen::VectorXd> per_vector(n_vectors);

  parallel_for(static_cast<std::size_t>(n_vectors), workers, [&](std::size_t r) {
    Rng rng = make_rng(seed, {0xc4eb, r});
    StateVector a0(n);
    for (Index i = 0; i < n; ++i) a0[i] = std::polar(1.0, kTwoPi * uniform01(rng));
    const double norm0 = a0.squaredNorm();  // = n

    // H~ x = (H x - shift x) / scale
    StateVector hx(n);
    auto apply = [&](const StateVector& x, StateVector& y) {
      H.apply(x, hx);
      y = (hx - rescale.shift * x) / rescale.scale;
    };

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n_moments);
    StateVector prev = a0;
    StateVector cur(n);
    StateVector next(n);
    apply(a0, cur);
    const double mu0 = 1.0;
    const double mu1 = a0.dot(cur).real() / norm0;
    mu[0] = mu0;
    if (n_moments > 1) mu[1] = mu1;
    // alpha_k = T_k(H~) a0; mu_2k = 2 <a_k|a_k> - mu_0, mu_2k+1 = 2 <a_k+1|a_k> - mu_1
    for (int k = 1; k < half; ++k) {
      if (2 * k < n_moments) mu[2 * k] = 2.0 * cur.squaredNorm() / norm0 - mu0;
      apply(cur, next);
      next = 2.0 * next - prev;
      if (2 * k + 1 < n_moments) mu[2 * k + 1] = 2.0 * cur.dot(next).real() / norm0 - mu1;
      if (next.squaredNorm() > 100.0 * norm0) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "Chebyshev recurrence blew up at order %d; spectrum leaves [-1, 1] under "
                      "scale %.6g, shift %.6g",
                      k + 1, rescale.scale, rescale.shift);
        throw NumericalError(buf);
      }
      std::swap(prev, cur);
      std::swap(cur, next);
    }
    per_vector[r] = std::move(mu);
  });

  ChebyshevMoments out;
  out.rescale = rescale;
  out.n_vectors = n_vectors;
  out.mu = Eigen::VectorXd::Zero(n_moments);
  for (const auto& mu : per_vector) out.mu += mu;
  out.mu /= n_vectors;
  out.mu[0] = 1.0;
  return out;
}

Eigen::VectorXd jackson_kernel(int M) {
  Eigen::VectorXd g(M);
  const double q = std::numbers::pi / (M + 1);
  for (int m = 0; m < M; ++m)
    g[m] = ((M - m + 1) * std::cos(q * m) + std::sin(q * m) / std::tan(q)) / (M + 1);
  return g;
}

DosEstimate dos_estimate(const ChebyshevMoments& moments, int grid_size) {
  if (grid_size < 2) throw InputError("DOS grid needs at least two points");
  const int M = static_cast<int>(moments.mu.size());
  if (M < 1) throw InputError("no moments");

  DosEstimate dos;
  dos.rescale = moments.rescale;
  dos.damped_moments = moments.mu.cwiseProduct(jackson_kernel(M));
  dos.energies.resize(grid_size);
  dos.density.resize(grid_size);
  dos.weights.resize(grid_size);

  const double pi = std::numbers::pi;
  const auto& gm = dos.damped_moments;
  for (int k = 0; k < grid_size; ++k) {
    // Node index reversed so energies ascend.
    const double theta = pi * (grid_size - k - 0.5) / grid_size;
    const double x = std::cos(theta);
    double sum = gm[0];
    for (int m = 1; m < M; ++m) sum += 2.0 * gm[m] * std::cos(m * theta);
    const double root = std::sin(theta);  // sqrt(1 - x^2)
    dos.energies[k] = moments.rescale.to_energy(x);
    dos.density[k] = sum / (pi * root * moments.rescale.scale);
    dos.weights[k] = pi * root * moments.rescale.scale / grid_size;
  }
  return dos;
}

ShellSelection select_shell(const DosEstimate& dos, double lo, double hi,
                            std::optional<double> recenter) {
  if (!(lo > 0.0 && lo < 1.0 && hi > 0.0 && hi < 1.0 && lo < hi))
    throw InputError("shell fractions must satisfy 0 < lower < upper < 1");
  const Index K = dos.energies.size();
  if (K < 2) throw InputError("DOS grid too small");

  const Eigen::VectorXd q = dos.weights.cwiseProduct(dos.density);
  const double total = q.sum();
  if (!(total > 0.0)) throw InputError("DOS integrates to a non-positive value");

  // Midpoint CDF at each grid node.
  std::vector<double> cdf(K);
  double run = 0.0;
  for (Index k = 0; k < K; ++k) {
    cdf[k] = (run + 0.5 * q[k]) / total;
    run += q[k];
  }

  // Pool-adjacent-violators: least-squares non-decreasing fit.
  std::vector<double> level;
  std::vector<Index> size;
  for (Index k = 0; k < K; ++k) {
    level.push_back(cdf[k]);
    size.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const double w1 = static_cast<double>(size[size.size() - 2]);
      const double w2 = static_cast<double>(size.back());
      const double merged = (w1 * level[level.size() - 2] + w2 * level.back()) / (w1 + w2);
      const Index merged_size = size[size.size() - 2] + size.back();
      level.pop_back();
      size.pop_back();
      level.back() = merged;
      size.back() = merged_size;
    }
  }
  ShellSelection sel;
  Index k = 0;
  for (std::size_t b = 0; b < level.size(); ++b) {
    for (Index j = 0; j < size[b]; ++j, ++k) {
      if (cdf[k] != level[b]) ++sel.isotonic_corrections;
      cdf[k] = level[b];
    }
  }

  auto invert = [&](double f) {
    if (f <= cdf.front()) return dos.energies[0];
    for (Index j = 1; j < K; ++j) {
      if (cdf[j] >= f) {
        const double span = cdf[j] - cdf[j - 1];
        const double t = span > 0.0 ? (f - cdf[j - 1]) / span : 0.0;
        return dos.energies[j - 1] + t * (dos.energies[j] - dos.energies[j - 1]);
      }
    }
    return dos.energies[K - 1];
  };

  sel.lower_energy = invert(lo);
  sel.upper_energy = invert(hi);
  sel.shell.half_width = 0.5 * (sel.upper_energy - sel.lower_energy);
  sel.shell.center = recenter.value_or(0.5 * (sel.upper_energy + sel.lower_energy));
  if (!(sel.shell.half_width > 0.0)) throw NumericalError("selected energy shell has zero width");
  return sel;
}

void write_dos_csv(const DosEstimate& dos, std::ostream& out) {
  out << "E_rad_per_us,density\n";
  char buf[80];
  for (Index k = 0; k < dos.energies.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", dos.energies[k], dos.density[k]);
    out << buf;
  }
}

template ChebyshevMoments chebyshev_moments(const SparseOperator<double>&,
                                            const ChebyshevRescale&, int, int, std::uint64_t, int);
template ChebyshevMoments chebyshev_moments(const SparseOperator<Complex>&,
                                            const ChebyshevRescale&, int, int, std::uint64_t, int);

}  // namespace stark
