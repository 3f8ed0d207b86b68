// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "stark/expdata.hpp"
#include "stark/oracle.hpp"
#include "stark/pipeline.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

using namespace stark;
namespace tor = testing_oracle;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::string fingerprint;  // exact bits of the key results
};

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void hash_into(std::string& fp, double x) { fp += fmt("%a;", x); }
void hash_into(std::string& fp, const Eigen::VectorXd& v) {
  for (double x : v) hash_into(fp, x);
}
void hash_into(std::string& fp, const StateVector& v) {
  for (const auto& z : v) {
    hash_into(fp, z.real());
    hash_into(fp, z.imag());
  }
}

struct Instance {
  ManifoldConfig cfg;
  StarkManifold m;
  ProductBasis b;
  SparseOperator<double> H;
};

Instance make_instance(ManifoldConfig cfg, int atoms, double c3_mhz, double ratio, double density,
                       std::uint64_t seed) {
  auto m = build_manifold(cfg);
  auto b = enumerate_basis(m, atoms, default_reference_energy(m, atoms), 0.5 * cfg.cluster_spacing);
  DipoleConfig dc;
  dc.inter_strength = std::sqrt(kTwoPi * c3_mhz);
  dc.ratio = ratio;
  auto H = assemble(m, build_dipole_table(m, dc, derive_seed(seed, {1})),
                    sample_positions(atoms, density, 0.0, derive_seed(seed, {2})), b)
               .op;
  return {std::move(cfg), std::move(m), std::move(b), std::move(H)};
}

ManifoldConfig ladder(int clusters, std::vector<double> offsets_mhz) {
  ManifoldConfig c;
  c.n_clusters = clusters;
  c.intra_offsets.clear();
  for (double o : offsets_mhz) c.intra_offsets.push_back(mhz_to_rad_per_us(o));
  return c;
}

// Two atoms, three clusters of two sublevels.
Instance pair_instance(std::uint64_t seed) {
  return make_instance(ladder(3, {0.0, 40.0}), 2, 20.0, 10.0, 1e10, seed);
}

// Three atoms, five clusters of four sublevels (dim 1216).
Instance triple_instance(std::uint64_t seed) {
  ManifoldConfig cfg;
  cfg.n_clusters = 5;
  return make_instance(cfg, 3, 200.0, 2.0, 1e10, seed);
}

EnergyShell middle_third(const Eigen::VectorXd& evals) {
  const Index n = evals.size();
  const double lo = evals[n / 3];
  const double hi = evals[(2 * n) / 3];
  return {0.5 * (lo + hi), 0.5 * (hi - lo)};
}

std::filesystem::path small_config_path() {
  return std::filesystem::path(STARK_SOURCE_DIR) / "configs" / "small.conf";
}

Outcome criterion_1() {
  Outcome o;
  double worst = 0.0, slowest = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto in = pair_instance(seed);
    const auto psi0 = initial_state(in.b);
    Stopwatch sw;
    EvolveOptions opt;
    opt.t_total = 3.0;
    const auto r = evolve(in.H, in.b, psi0, opt);
    slowest = std::max(slowest, sw.seconds());
    const auto exact = exact_evolve(exact_diagonalize(in.H), psi0, 3.0);
    worst = std::max(worst, 1.0 - fidelity(r.final_state, exact));
    hash_into(o.fingerprint, r.final_state);
  }
  o.pass = worst <= 1e-8 && slowest < 10.0;
  o.detail = fmt("dim 12, 3 seeds: max 1 - fidelity %.2e (<= 1e-8), slowest %.2f s (< 10 s)",
                 worst, slowest);
  return o;
}

Outcome criterion_2() {
  Outcome o;
  const auto in = pair_instance(4);
  const auto psi0 = initial_state(in.b);
  const auto exact = exact_evolve(exact_diagonalize(in.H), psi0, 3.0);
  const double dt = 0.5 / spectral_bounds(in.H).radius();
  std::vector<double> err;
  for (double h : {dt, dt / 2, dt / 4}) {
    StateVector x = psi0;
    rk4_propagate(in.H, x, 3.0, h);
    err.push_back((x - exact).norm());
    hash_into(o.fingerprint, x);
  }
  const double p1 = std::log2(err[0] / err[1]);
  const double p2 = std::log2(err[1] / err[2]);
  o.pass = p1 >= 3.5 && p1 <= 4.5 && p2 >= 3.5 && p2 <= 4.5;
  o.detail = fmt("errors %.2e, %.2e, %.2e; exponents %.3f, %.3f (in [3.5, 4.5])", err[0], err[1],
                 err[2], p1, p2);
  return o;
}

Outcome criterion_3() {
  Outcome o;
  const auto in = triple_instance(5);
  const auto bounds = spectral_bounds(in.H);
  const auto eig = exact_diagonalize(in.H);
  const EnergyShell shell = middle_third(eig.values);
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 3; ++k) {
    const auto psi = random_state(in.b.dim(), 5, k);
    const auto f = apply_energy_filter(in.H, psi, shell, bounds);
    worst = std::max(worst, 1.0 - fidelity(f.state, exact_filter(eig, psi, shell)));
    hash_into(o.fingerprint, f.state);
  }
  const auto psi = random_state(in.b.dim(), 6);
  const auto wide = apply_energy_filter(in.H, psi, {shell.center, 1e12}, bounds);
  const double identity = (wide.state - psi).norm();
  o.pass = worst <= 1e-6 && identity <= 1e-9 && in.b.dim() <= 2000;
  o.detail = fmt("dim %lld: max 1 - fidelity %.2e (<= 1e-6); wide-shell |f(psi) - psi| %.2e (<= 1e-9)",
                 static_cast<long long>(in.b.dim()), worst, identity);
  return o;
}

Outcome criterion_4() {
  Outcome o;
  Stopwatch sw;
  const auto in = triple_instance(6);
  const auto bounds = spectral_bounds(in.H);
  const auto dos = dos_estimate(
      chebyshev_moments(in.H, ChebyshevRescale::from_bounds(bounds), 512, 16, 6), 2048);
  const EnergyShell shell = select_shell(dos).shell;
  TypicalityOptions opt;
  opt.n_samples = 48;
  const auto est = thermal_populations(in.H, in.b, shell, bounds, 6, opt);
  const auto micro = microcanonical_average(exact_diagonalize(in.H), shell, in.b);
  double worst_ratio = 0.0, worst_dev = 0.0;
  for (Index c = 0; c < micro.size(); ++c) {
    const double dev = std::abs(est.mean[c] - micro[c]);
    const double allowed = std::max(0.02, 2.0 * est.stderr_mean[c]);
    worst_ratio = std::max(worst_ratio, dev / allowed);
    worst_dev = std::max(worst_dev, dev);
  }
  const double secs = sw.seconds();
  hash_into(o.fingerprint, est.mean);
  hash_into(o.fingerprint, est.stderr_mean);
  o.pass = worst_ratio <= 1.0 && secs < 300.0 && est.n_samples == 48;
  o.detail = fmt("dim %lld, %d samples: max |mean - microcanonical| %.4f, max ratio to allowance "
                 "%.2f (<= 1), %.1f s (< 300 s)",
                 static_cast<long long>(in.b.dim()), est.n_samples, worst_dev, worst_ratio, secs);
  return o;
}

Outcome criterion_5() {
  Outcome o;
  o.pass = true;
  std::string counts;
  double worst_integral = 0.0;
  for (std::uint64_t seed = 21; seed <= 25; ++seed) {
    const auto in = triple_instance(seed);
    const auto dos = dos_estimate(
        chebyshev_moments(in.H, ChebyshevRescale::from_bounds(spectral_bounds(in.H)), 512, 16, seed),
        2048);
    const auto sel = select_shell(dos);
    const auto eig = exact_diagonalize(in.H);
    const double dim = static_cast<double>(in.b.dim());
    const Index n = count_in_interval(eig, sel.lower_energy, sel.upper_energy);
    const bool ok = std::abs(n - dim / 3.0) <= std::max(2.0, 0.02 * dim);
    worst_integral = std::max(worst_integral, std::abs(dos.integral() - 1.0));
    o.pass = o.pass && ok;
    counts += fmt("%s%lld", counts.empty() ? "" : ", ", static_cast<long long>(n));
    hash_into(o.fingerprint, dos.density);
  }
  o.pass = o.pass && worst_integral <= 1e-3;
  o.detail = fmt("dim 1216 x 5: counts %s vs 405.3 +- 24.3; max |integral - 1| %.1e (<= 1e-3)",
                 counts.c_str(), worst_integral);
  return o;
}

Outcome criterion_6() {
  Outcome o;
  double norm = 0.0, energy = 0.0, sum = 0.0;
  int runs = 0;
  auto check = [&](const EvolveResult& r) {
    ++runs;
    for (std::size_t k = 0; k < r.trace.times.size(); ++k) {
      norm = std::max(norm, std::abs(r.trace.norm_drift[k]));
      energy = std::max(energy, std::abs(r.trace.energy_drift[k]));
      sum = std::max(sum, std::abs(r.trace.populations[k].sum() - 1.0));
    }
    hash_into(o.fingerprint, r.final_state);
  };
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto in = pair_instance(seed);
    check(evolve(in.H, in.b, initial_state(in.b), EvolveOptions{}));
  }
  {
    const auto in = triple_instance(8);
    check(evolve(in.H, in.b, initial_state(in.b), EvolveOptions{}));
  }
  const auto cfg = load_config(small_config_path());
  const auto model = build_model(cfg);
  for (int di = 0; di < static_cast<int>(cfg.densities_cm3.size()); ++di)
    check(run_realization(model, cfg, di, 0).evolution);
  o.pass = norm < 1e-6 && energy < 1e-6 && sum <= 1e-9;
  o.detail = fmt("%d propagations: max norm drift %.1e, max <H> drift / rho %.1e (< 1e-6), "
                 "max |sum p - 1| %.1e (<= 1e-9)",
                 runs, norm, energy, sum);
  return o;
}

Outcome criterion_7() {
  Outcome o;
  o.pass = true;
  const double w = mhz_to_rad_per_us(530.0);
  struct Case {
    ManifoldConfig cfg;
    int atoms;
  };
  std::vector<Case> cases = {{ManifoldConfig{}, 1}, {ManifoldConfig{}, 2},
                             {ladder(7, {0.0, 40.0}), 3}, {[] {
                                                             ManifoldConfig c;
                                                             c.n_clusters = 5;
                                                             return c;
                                                           }(),
                                                           3},
                             {ladder(3, {0.0, 40.0}), 4}, {ladder(5, {0.0, 40.0}), 4},
                             {ladder(3, {0.0, 13.0, 27.0}), 4}};
  int checked = 0;
  for (const auto& c : cases) {
    const auto m = build_manifold(c.cfg);
    if (std::pow(m.n_levels(), c.atoms) > 1e4) continue;
    const double ref = default_reference_energy(m, c.atoms);
    for (double window : {0.25 * w, 0.5 * w, 1.0 * w, 2.5 * w}) {
      const auto b = enumerate_basis(m, c.atoms, ref, window);
      const auto oracle = tor::brute_force_basis(c.cfg, c.atoms, ref, window);
      bool same = static_cast<std::size_t>(b.dim()) == oracle.size();
      for (Index i = 0; same && i < b.dim(); ++i) same = tor::to_tuple(b, i) == oracle[i];
      o.pass = o.pass && same;
      ++checked;
      o.fingerprint += fmt("%lld;", static_cast<long long>(b.dim()));
    }
  }
  const auto m = build_manifold(ManifoldConfig{});
  const auto full = enumerate_basis(m, 4, default_reference_energy(m, 4), 0.5 * w);
  const double ratio = static_cast<double>(full.dim()) / 376064.0;
  o.pass = o.pass && ratio >= 0.5 && ratio <= 2.0;
  o.fingerprint += fmt("%lld;", static_cast<long long>(full.dim()));
  o.detail = fmt("%d configurations identical to brute force; 4-atom default dim %lld "
                 "(%.3f x 376064, within a factor of 2)",
                 checked, static_cast<long long>(full.dim()), ratio);
  return o;
}

Outcome criterion_8() {
  using namespace stark::expdata;
  Outcome o;
  const auto g = measured_couplings();
  RegionBoundaries b;
  b.edges = Eigen::VectorXd::LinSpaced(14, 104.5, 104.5 + 13 * 0.53);
  const double width = 0.53;
  Rng rng = make_rng(8);
  std::vector<SpectrumShot> shots;
  std::vector<Eigen::VectorXd> truth;
  const int bins = 5, per_bin = 4;
  for (int k = 0; k < bins; ++k) {
    Eigen::VectorXd p(13);
    for (auto& x : p) x = 0.01 + uniform01(rng);
    truth.push_back(p / p.sum());
  }
  // Each region carries a tent of area scale * g_c * p_c, sampled at its edges and apex.
  for (int i = 0; i < bins * per_bin; ++i) {
    const int k = i % bins;
    const double scale = 0.5 + uniform01(rng);
    std::vector<double> f, s;
    for (int r = 0; r < 13; ++r) {
      const double h = 2.0 * scale * g[r] * truth[k][r] / width;
      for (int j = (r == 0 ? 0 : 1); j <= 8; ++j) {
        f.push_back(b.edges[r] + width * j / 8.0);
        s.push_back(h * (1.0 - std::abs(j - 4) / 4.0));
      }
    }
    SpectrumShot shot;
    shot.freq_ghz = Eigen::Map<Eigen::VectorXd>(f.data(), f.size());
    shot.signal = Eigen::Map<Eigen::VectorXd>(s.data(), s.size());
    shot.total_signal = k + 0.5 * uniform01(rng);
    shots.push_back(std::move(shot));
  }
  double worst = 0.0;
  ReductionOptions opt;
  opt.n_bins = bins;
  for (bool per_shot : {true, false}) {
    opt.normalize_per_shot = per_shot;
    const auto res = reduce(shots, b, g, opt);
    for (int k = 0; k < bins; ++k) {
      worst = std::max(worst, (res[k].populations - truth[k]).cwiseAbs().maxCoeff());
      hash_into(o.fingerprint, res[k].populations);
    }
  }
  o.pass = worst <= 1e-10;
  o.detail = fmt("%d shots in %d bins, both normalization orders: max |p - truth| %.1e (<= 1e-10)",
                 bins * per_bin, bins, worst);
  return o;
}

struct SweepCheck {
  Outcome outcome;
  SweepResult sweep;
};

SweepCheck criterion_9() {
  SweepCheck out;
  Outcome& o = out.outcome;
  Stopwatch sw;
  auto cfg = load_config(small_config_path());
  cfg.sweep_thermal_all_densities = true;
  const auto model = build_model(cfg);
  out.sweep = run_density_sweep(model, cfg);
  const auto& s = out.sweep;
  const double secs = sw.seconds();
  const Index c0 = model.manifold.half_width();
  const int nd = static_cast<int>(s.rows.size());

  std::string line = "p0";
  for (const auto& row : s.rows) {
    line += fmt(" %.3f+-%.3f", row.mean[c0], row.stderr_mean[c0]);
    hash_into(o.fingerprint, row.mean);
  }

  // Monotone decrease up to 2 combined standard errors between neighbours.
  bool monotone = true;
  for (int d = 0; d + 1 < nd; ++d) {
    const auto& a = s.rows[d];
    const auto& b = s.rows[d + 1];
    const double sigma = std::hypot(a.stderr_mean[c0], b.stderr_mean[c0]);
    monotone = monotone && b.mean[c0] - a.mean[c0] <= 2.0 * sigma;
  }
  monotone = monotone && s.rows.back().mean[c0] < s.rows.front().mean[c0];

  // Above the thermal prediction at every density.
  bool above = static_cast<int>(s.thermal.size()) == nd;
  line += "; thermal p0";
  for (int d = 0; above && d < nd; ++d) {
    const auto& th = s.thermal[d].estimate;
    line += fmt(" %.3f", th.mean[c0]);
    above = above && s.rows[d].mean[c0] > th.mean[c0];
    hash_into(o.fingerprint, th.mean);
  }

  // Thermal prediction identical across densities within its statistical
  // error: per cluster, chi-square of the spread about the weighted mean
  // below the 1% point with nd - 1 degrees of freedom.
  const double chi2_crit[] = {0.0, 6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090, 21.666};
  bool identical = above && nd >= 2 && nd <= 10;
  double worst_chi2 = 0.0;
  for (Index c = 0; identical && c < model.manifold.n_clusters(); ++c) {
    double wsum = 0.0, wx = 0.0;
    for (const auto& t : s.thermal) {
      const double w = 1.0 / std::max(std::pow(t.estimate.stderr_mean[c], 2), 1e-16);
      wsum += w;
      wx += w * t.estimate.mean[c];
    }
    const double mean = wx / wsum;
    double chi2 = 0.0;
    for (const auto& t : s.thermal)
      chi2 += std::pow(t.estimate.mean[c] - mean, 2) /
              std::max(std::pow(t.estimate.stderr_mean[c], 2), 1e-16);
    worst_chi2 = std::max(worst_chi2, chi2);
  }
  if (identical) identical = worst_chi2 <= chi2_crit[nd - 1];

  int equilibrated = 0, total = 0;
  for (const auto& row : s.rows) {
    equilibrated += row.equilibrated;
    total += row.realizations;
  }
  const bool scale_ok = cfg.n_atoms == 3 && cfg.manifold.n_clusters == 7 && nd == 5 &&
                        cfg.realizations >= 10 &&
                        cfg.densities_cm3.back() / cfg.densities_cm3.front() >= 99.0;
  o.pass = monotone && above && identical && secs < 7200.0 && scale_ok;
  o.detail = fmt("dim %lld, %d densities x %d realizations: %s; monotone %s, above thermal %s, "
                 "thermal spread max chi2 %.2f (<= %.2f), equilibrated %d/%d, %.0f s (< 7200 s)",
                 static_cast<long long>(model.basis.dim()), nd, cfg.realizations, line.c_str(),
                 monotone ? "yes" : "no", above ? "yes" : "no", worst_chi2,
                 nd >= 2 && nd <= 10 ? chi2_crit[nd - 1] : 0.0, equilibrated, total, secs);
  return out;
}

Outcome criterion_10(const std::vector<std::function<Outcome()>>& criteria,
                     const std::vector<Outcome>& first) {
  Outcome o;
  o.pass = true;
  std::string mismatched;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const bool same = criteria[k]().fingerprint == first[k].fingerprint;
    if (!same) mismatched += fmt(" %zu", k + 1);
    o.pass = o.pass && same && !first[k].fingerprint.empty();
  }
  // Reduced sweep: one realization per density and a thermal run, repeated
  // with a different worker count.
  auto cfg = load_config(small_config_path());
  const auto model = build_model(cfg);
  auto sweep_bits = [&](int workers) {
    cfg.workers = workers;
    std::string fp;
    for (int di : {0, static_cast<int>(cfg.densities_cm3.size()) - 1}) {
      const auto r = run_realization(model, cfg, di, 1);
      hash_into(fp, r.evolution.final_state);
      hash_into(fp, r.equilibrium.p_eq);
    }
    const auto H = build_hamiltonian(model, realization_geometry(cfg, 0, 0), cfg).op;
    const auto th = run_thermal(model, H, cfg, 0, cfg.shell_lower_fraction, cfg.shell_upper_fraction);
    hash_into(fp, th.dos.density);
    hash_into(fp, th.estimate.mean);
    return fp;
  };
  const bool sweep_same = sweep_bits(1) == sweep_bits(2);
  if (!sweep_same) mismatched += " 9";
  o.pass = o.pass && sweep_same;
  o.detail = o.pass ? std::string("criteria 1-8 rerun bit-identical; reduced sweep identical across "
                                      "reruns and worker counts")
                    : "mismatch in criteria" + mismatched;
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> named = {
      {"oracle equivalence (dynamics)", criterion_1},
      {"RK4 order", criterion_2},
      {"filter correctness", criterion_3},
      {"typicality vs microcanonical average", criterion_4},
      {"KPM shell counting", criterion_5},
      {"conservation suite", criterion_6},
      {"basis truncation", criterion_7},
      {"data-reduction round trip", criterion_8},
  };
  int failures = 0;
  auto report = [&](int k, const std::string& name, const Outcome& o) {
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", k, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };

  std::vector<std::function<Outcome()>> fns;
  std::vector<Outcome> first;
  for (std::size_t k = 0; k < named.size(); ++k) {
    Outcome o;
    try {
      o = named[k].second();
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what();
    }
    report(static_cast<int>(k + 1), named[k].first, o);
    fns.push_back(named[k].second);
    first.push_back(o);
  }

  Outcome o9;
  try {
    o9 = criterion_9().outcome;
  } catch (const std::exception& e) {
    o9.detail = std::string("exception: ") + e.what();
  }
  report(9, "reduced density sweep", o9);

  Outcome o10;
  try {
    o10 = criterion_10(fns, first);
  } catch (const std::exception& e) {
    o10.detail = std::string("exception: ") + e.what();
  }
  report(10, "reproducibility", o10);

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
