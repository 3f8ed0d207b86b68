#include "stark/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace stark {

double choose_time_step(double spectral_radius, double t_total, const TimeStepPolicy& policy) {
  if (!(spectral_radius > 0.0)) return std::abs(t_total) > 0.0 ? std::abs(t_total) : 1.0;
  double x = policy.stability_fraction;
  if (policy.phase_tolerance > 0.0 && t_total != 0.0) {
    const double rho_t = spectral_radius * std::abs(t_total);
    x = std::min(x, std::pow(120.0 * policy.phase_tolerance / rho_t, 0.25));
  }
  if (policy.norm_tolerance > 0.0 && t_total != 0.0) {
    const double rho_t = spectral_radius * std::abs(t_total);
    x = std::min(x, std::pow(72.0 * policy.norm_tolerance / rho_t, 0.2));
  }
  return x / spectral_radius;
}

namespace {

const Complex kMinusI(0.0, -1.0);

std::int64_t step_count(double t, double dt) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(std::abs(t / dt) - 1e-9)));
}

}  // namespace

template <typename Scalar>
void rk4_propagate(const SparseOperator<Scalar>& H, StateVector& psi, double t, double dt) {
  if (t == 0.0) return;
  if (!(std::abs(dt) > 0.0)) throw InputError("time step must be nonzero");
  const std::int64_t n = step_count(t, dt);
  const double h = t / static_cast<double>(n);
  Rk4Stepper rk(psi.size());
  auto rhs = [&](const StateVector& in, StateVector& out) {
    H.apply(in, out);
    out *= kMinusI;
  };
  for (std::int64_t k = 0; k < n; ++k) rk.step(rhs, psi, h);
}

template <typename Scalar>
EvolveResult evolve(const SparseOperator<Scalar>& H, const ProductBasis& basis,
                    const StateVector& psi0, const EvolveOptions& opt) {
  if (psi0.size() != H.dim() || basis.dim() != H.dim())
    throw InputError("state, basis and operator dimensions disagree");
  if (!(opt.t_total > 0.0)) throw InputError("total time must be > 0");

  EvolveResult res;
  res.spectral_radius =
      opt.spectral_radius > 0.0 ? opt.spectral_radius : spectral_bounds(H).radius();
  const double rho = res.spectral_radius;
  double dt = opt.dt > 0.0 ? opt.dt : choose_time_step(rho, opt.t_total, opt.policy);
  if (rho > 0.0 && dt > kRk4StabilityLimit / rho) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "dt = %.3e us exceeds the RK4 stability bound %.3e us",
                  dt, kRk4StabilityLimit / rho);
    throw InputError(buf);
  }
  res.steps = step_count(opt.t_total, dt);
  res.dt = dt = opt.t_total / static_cast<double>(res.steps);
  const std::int64_t every =
      opt.sample_every > 0
          ? opt.sample_every
          : std::max<std::int64_t>(1, std::llround(opt.sample_interval / dt));

  StateVector psi = psi0;
  const double e0 = H.expectation(psi);
  const double escale = rho > 0.0 ? rho : 1.0;
  auto record = [&](std::int64_t k) {
    const double norm2 = psi.squaredNorm();
    const double drift = 1.0 - norm2;
    auto& tr = res.trace;
    tr.times.push_back(static_cast<double>(k) * dt);
    tr.populations.push_back(measure_populations(basis, psi) / norm2);
    tr.norm_drift.push_back(drift);
    tr.energy_drift.push_back((H.expectation(psi) / norm2 - e0) / escale);
    if (std::abs(drift) > opt.max_norm_drift) {
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "norm drift %.3e at t = %.4f us exceeds %.1e; reduce dt (now %.3e us, "
                    "rho dt = %.3f)",
                    drift, tr.times.back(), opt.max_norm_drift, dt, rho * dt);
      throw NumericalError(buf);
    }
  };

  Rk4Stepper rk(psi.size());
  auto rhs = [&](const StateVector& in, StateVector& out) {
    H.apply(in, out);
    out *= kMinusI;
  };
  record(0);
  for (std::int64_t k = 1; k <= res.steps; ++k) {
    rk.step(rhs, psi, dt);
    if (k % every == 0 || k == res.steps) record(k);
  }
  res.final_state = std::move(psi);
  return res;
}

Equilibrium detect_equilibrium(const PopulationTrace& trace, double window, double tol) {
  if (!(window > 0.0)) throw InputError("equilibration window must be > 0");
  if (trace.times.size() < 2) throw InputError("trace too short for equilibrium detection");
  const double t0 = trace.times.front();
  const double t1 = trace.times.back();
  const int windows = static_cast<int>(std::floor((t1 - t0) / window + 1e-9));
  if (windows < 2) throw InputError("trace must span at least two equilibration windows");

  const Index nc = trace.populations.front().size();
  std::vector<ClusterPopulations> avg(windows, ClusterPopulations::Zero(nc));
  std::vector<int> count(windows, 0);
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    const int w = std::min(windows - 1, static_cast<int>((trace.times[k] - t0) / window));
    avg[w] += trace.populations[k];
    ++count[w];
  }
  for (int w = 0; w < windows; ++w) {
    if (count[w] == 0) throw InputError("equilibration window holds no samples");
    avg[w] /= count[w];
  }

  Equilibrium eq;
  eq.windows = windows;
  int first = windows - 1;
  for (int w = windows - 2; w >= 0; --w) {
    if ((avg[w + 1] - avg[w]).cwiseAbs().maxCoeff() >= tol) break;
    first = w;
  }
  eq.equilibrated = first <= windows - 2;
  eq.t_eq = eq.equilibrated ? t0 + (first + 1) * window : t1;

  ClusterPopulations tail = ClusterPopulations::Zero(nc);
  int n = 0;
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    if (trace.times[k] >= t1 - window - 1e-12) {
      tail += trace.populations[k];
      ++n;
    }
  }
  eq.p_eq = tail / n;
  return eq;
}

std::string cluster_label(int slot, int n_clusters) {
  const int c = slot - (n_clusters - 1) / 2;
  if (c == 0) return "0";
  return (c < 0 ? "m" : "p") + std::to_string(std::abs(c));
}

void write_trace_csv(const PopulationTrace& trace, std::ostream& out) {
  if (trace.times.empty()) return;
  const int nc = static_cast<int>(trace.populations.front().size());
  out << "t_us";
  for (int k = 0; k < nc; ++k) out << ",p_" << cluster_label(k, nc);
  out << ",norm_drift\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", trace.times[i]);
    out << buf;
    for (int k = 0; k < nc; ++k) {
      std::snprintf(buf, sizeof buf, ",%.17g", trace.populations[i][k]);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g\n", trace.norm_drift[i]);
    out << buf;
  }
}

template void rk4_propagate(const SparseOperator<double>&, StateVector&, double, double);
template void rk4_propagate(const SparseOperator<Complex>&, StateVector&, double, double);
template EvolveResult evolve(const SparseOperator<double>&, const ProductBasis&,
                             const StateVector&, const EvolveOptions&);
template EvolveResult evolve(const SparseOperator<Complex>&, const ProductBasis&,
                             const StateVector&, const EvolveOptions&);

}  // namespace stark
