#include "stark/pipeline.hpp"

#include <cmath>

namespace stark {

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  Rng rng = make_rng(seed, ids);
  return rng();
}

Model build_model(const RunConfig& config) {
  validate(config);
  StarkManifold manifold = build_manifold(config.manifold);
  DipoleTable dipoles;
  if (!config.dipole_matrix_csv.empty()) {
    dipoles = load_dipole_csv(manifold, config.dipole_matrix_csv);
  } else {
    DipoleConfig dc = config.dipoles;
    dc.inter_strength = std::sqrt(kTwoPi * config.c3_inter_mhz_um3);
    dipoles = build_dipole_table(manifold, dc, derive_seed(config.seed, {1}));
  }
  const double reference =
      config.reference.value_or(default_reference_energy(manifold, config.n_atoms));
  ProductBasis basis =
      enumerate_basis(manifold, config.n_atoms, reference, config.window_value(), config.max_dim);
  return {std::move(manifold), std::move(dipoles), std::move(basis)};
}

AtomGeometry realization_geometry(const RunConfig& config, int density_index, int realization) {
  const auto di = static_cast<std::size_t>(density_index);
  if (di >= config.densities_cm3.size()) throw InputError("density index out of range");
  return sample_positions(config.n_atoms, config.densities_cm3[di], config.exclusion_um,
                          derive_seed(config.seed, {2, di, static_cast<std::uint64_t>(realization)}));
}

AssembledHamiltonian build_hamiltonian(const Model& model, const AtomGeometry& geometry,
                                       const RunConfig& config) {
  return assemble(model.manifold, model.dipoles, geometry, model.basis, config.hamiltonian);
}

EvolveOptions evolve_options(const RunConfig& config, double spectral_radius) {
  EvolveOptions opt;
  opt.t_total = config.t_total_us;
  opt.dt = config.dt_us;
  opt.policy = config.time_step;
  opt.sample_interval = config.sample_interval_us;
  opt.spectral_radius = spectral_radius;
  return opt;
}

RealizationResult run_realization(const Model& model, const RunConfig& config, int density_index,
                                  int realization) {
  const AtomGeometry geometry = realization_geometry(config, density_index, realization);
  const AssembledHamiltonian H = build_hamiltonian(model, geometry, config);
  const SpectralBounds bounds = spectral_bounds(H.op);
  RealizationResult r;
  r.dim = static_cast<std::size_t>(H.op.dim());
  r.nnz = static_cast<std::size_t>(H.op.nnz());
  r.evolution = evolve(H.op, model.basis, initial_state(model.basis),
                       evolve_options(config, bounds.radius()));
  r.equilibrium = detect_equilibrium(r.evolution.trace, config.eq_window_us, config.eq_tol);
  return r;
}

ThermalRun run_thermal(const Model& model, const SparseOperator<double>& H, const RunConfig& config,
                       int density_index, double lower_fraction, double upper_fraction) {
  const auto di = static_cast<std::uint64_t>(density_index);
  ThermalRun t;
  t.bounds = spectral_bounds(H);
  const ChebyshevMoments mu =
      chebyshev_moments(H, ChebyshevRescale::from_bounds(t.bounds), config.kpm_moments,
                        config.kpm_vectors, derive_seed(config.seed, {4, di}), config.workers);
  t.dos = dos_estimate(mu, config.kpm_grid);
  t.initial_energy = H.expectation(initial_state(model.basis));
  std::optional<double> center;
  if (config.shell_recenter) center = t.initial_energy;
  t.shell = select_shell(t.dos, lower_fraction, upper_fraction, center);

  TypicalityOptions opt;
  opt.n_samples = config.typicality_samples;
  opt.stop_stderr = config.typicality_stop_stderr;
  opt.min_samples = config.typicality_min_samples;
  opt.workers = config.workers;
  t.estimate = thermal_populations(H, model.basis, t.shell.shell, t.bounds,
                                   derive_seed(config.seed, {3, di}), opt);
  return t;
}

SweepResult run_density_sweep(const Model& model, const RunConfig& config) {
  const int nd = static_cast<int>(config.densities_cm3.size());
  const int nr = config.realizations;
  std::vector<Equilibrium> eq(static_cast<std::size_t>(nd * nr));
  parallel_for(eq.size(), config.workers, [&](std::size_t job) {
    const int d = static_cast<int>(job) / nr;
    const int r = static_cast<int>(job) % nr;
    eq[job] = run_realization(model, config, d, r).equilibrium;
  });

  SweepResult out;
  for (int d = 0; d < nd; ++d) {
    SweepRow row;
    row.density_cm3 = config.densities_cm3[d];
    row.realizations = nr;
    Eigen::MatrixXd p(model.basis.n_clusters(), nr);
    for (int r = 0; r < nr; ++r) {
      const auto& e = eq[static_cast<std::size_t>(d * nr + r)];
      p.col(r) = e.p_eq;
      row.equilibrated += e.equilibrated ? 1 : 0;
    }
    row.mean = p.rowwise().mean();
    if (nr > 1) {
      const Eigen::MatrixXd centered = p.colwise() - row.mean;
      row.stderr_mean =
          (centered.rowwise().squaredNorm() / double(nr - 1)).cwiseSqrt() / std::sqrt(double(nr));
    } else {
      row.stderr_mean = Eigen::VectorXd::Zero(model.basis.n_clusters());
    }
    out.rows.push_back(std::move(row));
  }

  if (config.sweep_thermal_all_densities) {
    for (int d = 0; d < nd; ++d) out.thermal_density_indices.push_back(d);
  } else {
    out.thermal_density_indices.push_back(nd - 1);
  }
  // Typicality parallelizes over samples internally, so densities run in
  // sequence here.
  for (int d : out.thermal_density_indices) {
    const AssembledHamiltonian H =
        build_hamiltonian(model, realization_geometry(config, d, 0), config);
    out.thermal.push_back(run_thermal(model, H.op, config, d, config.shell_lower_fraction,
                                      config.shell_upper_fraction));
  }
  return out;
}

}  // namespace stark
