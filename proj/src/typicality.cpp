#include "stark/typicality.hpp"

#include "stark/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <optional>

namespace stark {

StateVector random_state(Index dim, std::uint64_t seed, std::uint64_t stream) {
  if (dim < 1) throw InputError("random state needs dim >= 1");
  for (std::uint64_t retry = 0;; ++retry) {
    Rng rng = make_rng(seed, {0x7e9, stream, retry});
    StateVector psi(dim);
    for (Index i = 0; i < dim; ++i) {
      const double u = uniform01(rng);
      const double theta = kTwoPi * uniform01(rng);
      psi[i] = std::polar(u, theta);
    }
    const double norm = psi.norm();
    if (norm > 0.0) return psi / norm;
  }
}

template <typename Scalar>
FilterResult apply_energy_filter(const SparseOperator<Scalar>& H, const StateVector& psi,
                                 const EnergyShell& shell, const SpectralBounds& bounds,
                                 double ds) {
  if (psi.size() != H.dim()) throw InputError("state and operator dimensions disagree");
  if (!(shell.half_width > 0.0)) throw InputError("shell half-width must be > 0");

  FilterResult res;
  const double norm0 = psi.norm();
  if (!(norm0 > 0.0)) throw InputError("cannot filter the zero vector");
  res.state = psi / norm0;

  const double s_final = 1.0 / (4.0 * shell.half_width * shell.half_width);
  const double lambda =
      std::max(std::abs(bounds.lower - shell.center), std::abs(bounds.upper - shell.center));
  if (s_final == 0.0 || lambda == 0.0) return res;

  const double limit = 0.1 / (lambda * lambda);
  if (ds <= 0.0) ds = 0.05 / (lambda * lambda);
  if (ds > limit * (1.0 + 1e-12)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "filter step %.3e exceeds the stability limit %.3e", ds, limit);
    throw InputError(buf);
  }
  res.steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(s_final / ds - 1e-9)));
  const double h = s_final / static_cast<double>(res.steps);

  StateVector tmp(psi.size());
  Rk4Stepper rk(psi.size());
  const double e0 = shell.center;
  auto rhs = [&](const StateVector& in, StateVector& out) {
    H.apply(in, tmp);
    tmp -= e0 * in;
    H.apply(tmp, out);
    out -= e0 * tmp;
    out = -out;
  };
  StateVector& y = res.state;
  for (std::int64_t k = 0; k < res.steps; ++k) {
    rk.step(rhs, y, h);
    const double norm = y.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw NumericalError("energy filter norm underflow; shell too narrow");
    res.log_norm += std::log(norm);
    y /= norm;
  }
  // Below exp(-700) the surviving components sit at the level of rounding
  // noise in the original vector.
  if (res.log_norm < -700.0)
    throw NumericalError("energy filter suppressed the state below working precision; "
                         "shell too narrow");
  return res;
}

template <typename Scalar>
ThermalEstimate thermal_populations(const SparseOperator<Scalar>& H, const ProductBasis& basis,
                                    const EnergyShell& shell, const SpectralBounds& bounds,
                                    std::uint64_t seed, const TypicalityOptions& opt) {
  if (opt.n_samples < 2) throw InputError("typicality needs at least 2 samples");
  if (basis.dim() != H.dim()) throw InputError("basis and operator dimensions disagree");

  const int nc = basis.n_clusters();
  std::vector<std::optional<ClusterPopulations>> samples(opt.n_samples);
  std::vector<std::string> errors(opt.n_samples);

  auto draw = [&](std::size_t k) {
    try {
      const StateVector psi = random_state(basis.dim(), seed, k);
      const FilterResult f = apply_energy_filter(H, psi, shell, bounds, opt.ds);
      samples[k] = measure_populations(basis, f.state);
    } catch (const NumericalError& e) {
      errors[k] = e.what();
    }
  };

  auto reduce = [&](int upto, ThermalEstimate& est) {
    Eigen::MatrixXd rows(nc, upto);
    int good = 0;
    for (int k = 0; k < upto; ++k)
      if (samples[k]) rows.col(good++) = *samples[k];
    est.n_samples = good;
    est.failed = upto - good;
    if (good == 0) return;
    est.mean = rows.leftCols(good).rowwise().mean();
    if (good > 1) {
      const Eigen::MatrixXd centered = rows.leftCols(good).colwise() - est.mean;
      est.stderr_mean =
          (centered.rowwise().squaredNorm() / (good - 1)).cwiseSqrt() / std::sqrt(double(good));
    } else {
      est.stderr_mean = Eigen::VectorXd::Constant(nc, std::numeric_limits<double>::quiet_NaN());
    }
  };

  ThermalEstimate est;
  const int batch = std::max(1, opt.workers);
  int done = 0;
  while (done < opt.n_samples) {
    const int next = std::min(opt.n_samples, done + batch);
    parallel_for(static_cast<std::size_t>(next - done), opt.workers,
                 [&](std::size_t k) { draw(done + k); });
    // Evaluate the stopping rule sample by sample so the cut point is the
    // same for any batch size.
    bool stop = false;
    for (int upto = done + 1; upto <= next; ++upto) {
      if (opt.stop_stderr > 0.0 && upto >= std::max(2, opt.min_samples)) {
        ThermalEstimate trial;
        reduce(upto, trial);
        if (trial.n_samples > 1 && trial.stderr_mean.maxCoeff() < opt.stop_stderr) {
          done = upto;
          stop = true;
          break;
        }
      }
    }
    if (stop) break;
    done = next;
  }

  reduce(done, est);
  if (est.failed * 2 > done) {
    std::string first;
    for (const auto& e : errors)
      if (!e.empty()) {
        first = e;
        break;
      }
    throw NumericalError("typicality: " + std::to_string(est.failed) + " of " +
                         std::to_string(done) + " samples failed (" + first + ")");
  }
  est.mean /= est.mean.sum();
  return est;
}

template FilterResult apply_energy_filter(const SparseOperator<double>&, const StateVector&,
                                          const EnergyShell&, const SpectralBounds&, double);
template FilterResult apply_energy_filter(const SparseOperator<Complex>&, const StateVector&,
                                          const EnergyShell&, const SpectralBounds&, double);
template ThermalEstimate thermal_populations(const SparseOperator<double>&, const ProductBasis&,
                                             const EnergyShell&, const SpectralBounds&,
                                             std::uint64_t, const TypicalityOptions&);
template ThermalEstimate thermal_populations(const SparseOperator<Complex>&, const ProductBasis&,
                                             const EnergyShell&, const SpectralBounds&,
                                             std::uint64_t, const TypicalityOptions&);

}  // namespace stark
