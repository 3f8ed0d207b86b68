#include "stark/oracle.hpp"
#include "stark/pipeline.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace stark;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> density_bin;
};

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& a, const std::string& what) {
  if (!a.is_array()) throw InputError(what + ": expected an array");
  Eigen::VectorXd v(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    v[static_cast<Index>(i)] = a[i].is_null() ? std::nan("") : a[i].get<double>();
  return v;
}

json labels(int n_clusters) {
  json a = json::array();
  for (int k = 0; k < n_clusters; ++k) a.push_back(cluster_label(k, n_clusters));
  return a;
}

std::string format17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Run {
public:
  Run(std::string command, const Options& opt) : command_(std::move(command)), opt_(opt) {
    if (opt.config.empty()) throw InputError("--config is required");
    config_ = load_config(opt.config);
    if (opt.seed) config_.seed = *opt.seed;
    if (opt.workers) config_.workers = *opt.workers;
    validate(config_);
    out_ = opt.out;
    fs::create_directories(out_);
  }

  RunConfig& config() { return config_; }
  int density_bin(int fallback = 0) const { return opt_.density_bin.value_or(fallback); }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(out_ / name, std::ios::binary);
    if (!f) throw InputError("cannot write " + (out_ / name).string());
    return f;
  }

  void write_json(const std::string& name, json result) const {
    json doc;
    doc["version"] = version();
    doc["command"] = command_;
    doc["config"] = config_.to_json();
    doc["result"] = std::move(result);
    open(name) << doc.dump(2) << '\n';
  }

private:
  std::string command_;
  Options opt_;
  RunConfig config_;
  fs::path out_;
};

int checked_density(const RunConfig& c, int d) {
  if (d < 0 || d >= static_cast<int>(c.densities_cm3.size()))
    throw InputError("--density-bin " + std::to_string(d) + " outside the density list");
  return d;
}

json basis_summary(const Model& m) {
  json j;
  j["n_atoms"] = m.basis.n_atoms();
  j["n_levels"] = m.basis.n_levels();
  j["dim"] = m.basis.dim();
  j["window_mhz"] = rad_per_us_to_mhz(m.basis.window());
  j["reference_mhz"] = rad_per_us_to_mhz(m.basis.reference_energy());
  j["cluster_labels"] = labels(m.basis.n_clusters());
  j["cluster_occupancy"] = to_json(m.basis.cluster_occupancy());
  return j;
}

json hamiltonian_summary(const AssembledHamiltonian& H) {
  json j;
  j["dim"] = H.op.dim();
  j["nnz"] = H.op.nnz();
  j["two_body_couplings"] = H.two_body_couplings;
  j["three_body_paths"] = H.three_body_paths;
  j["skipped_denominators"] = H.skipped_denominators;
  return j;
}

json shell_json(const ThermalRun& t, double lower, double upper) {
  json j;
  j["lower_fraction"] = lower;
  j["upper_fraction"] = upper;
  j["center"] = t.shell.shell.center;
  j["half_width"] = t.shell.shell.half_width;
  j["cdf_lower_energy"] = t.shell.lower_energy;
  j["cdf_upper_energy"] = t.shell.upper_energy;
  j["isotonic_corrections"] = t.shell.isotonic_corrections;
  j["initial_energy"] = t.initial_energy;
  j["spectral_bounds"] = {t.bounds.lower, t.bounds.upper};
  j["dos_integral"] = t.dos.integral();
  return j;
}

json thermal_json(const ThermalRun& t, double lower, double upper) {
  json j;
  j["shell"] = shell_json(t, lower, upper);
  j["populations"] = to_json(t.estimate.mean);
  j["stderr"] = to_json(t.estimate.stderr_mean);
  j["n_samples"] = t.estimate.n_samples;
  j["failed_samples"] = t.estimate.failed;
  return j;
}

int cmd_basis(Run& run) {
  const Model m = build_model(run.config());
  run.write_json("basis.json", basis_summary(m));
  return 0;
}

int cmd_evolve(Run& run) {
  const RunConfig& c = run.config();
  const int d = checked_density(c, run.density_bin());
  const Model m = build_model(c);
  const AtomGeometry g = realization_geometry(c, d, 0);
  const AssembledHamiltonian H = build_hamiltonian(m, g, c);
  const SpectralBounds b = spectral_bounds(H.op);
  const EvolveResult r = evolve(H.op, m.basis, initial_state(m.basis), evolve_options(c, b.radius()));
  const Equilibrium eq = detect_equilibrium(r.trace, c.eq_window_us, c.eq_tol);

  auto trace = run.open("trace.csv");
  write_trace_csv(r.trace, trace);
  auto pos = run.open("positions.csv");
  write_positions_csv(g, pos);

  json j;
  j["density_index"] = d;
  j["density_cm3"] = c.densities_cm3[static_cast<std::size_t>(d)];
  j["hamiltonian"] = hamiltonian_summary(H);
  j["spectral_bounds"] = {b.lower, b.upper};
  j["dt_us"] = r.dt;
  j["steps"] = r.steps;
  j["final_norm_drift"] = r.trace.norm_drift.back();
  j["final_energy_drift"] = r.trace.energy_drift.back();
  j["equilibrated"] = eq.equilibrated;
  j["t_eq_us"] = eq.equilibrated ? json(eq.t_eq) : json(nullptr);
  j["cluster_labels"] = labels(m.basis.n_clusters());
  j["populations"] = to_json(eq.p_eq);
  j["final_populations"] = to_json(r.trace.populations.back());
  run.write_json("evolve.json", j);
  return 0;
}

int cmd_thermal(Run& run) {
  const RunConfig& c = run.config();
  const int d = checked_density(c, run.density_bin());
  const Model m = build_model(c);
  const AssembledHamiltonian H = build_hamiltonian(m, realization_geometry(c, d, 0), c);
  const ThermalRun t =
      run_thermal(m, H.op, c, d, c.shell_lower_fraction, c.shell_upper_fraction);

  json j = thermal_json(t, c.shell_lower_fraction, c.shell_upper_fraction);
  j["density_index"] = d;
  j["cluster_labels"] = labels(m.basis.n_clusters());
  json sweep = json::array();
  for (double w : c.shell_sweep_widths) {
    const double lo = 0.5 - 0.5 * w;
    const double hi = 0.5 + 0.5 * w;
    sweep.push_back(thermal_json(run_thermal(m, H.op, c, d, lo, hi), lo, hi));
  }
  j["shell_sweep"] = std::move(sweep);
  run.write_json("thermal.json", j);

  // Same columns as trace.csv so the thermal row overlays the dynamics.
  PopulationTrace row;
  row.times.push_back(c.t_total_us);
  row.populations.push_back(t.estimate.mean);
  row.norm_drift.push_back(0.0);
  auto csv = run.open("thermal.csv");
  write_trace_csv(row, csv);
  return 0;
}

int cmd_dos(Run& run) {
  const RunConfig& c = run.config();
  const int d = checked_density(c, run.density_bin());
  const Model m = build_model(c);
  const AssembledHamiltonian H = build_hamiltonian(m, realization_geometry(c, d, 0), c);
  ThermalRun t;
  t.bounds = spectral_bounds(H.op);
  const ChebyshevMoments mu =
      chebyshev_moments(H.op, ChebyshevRescale::from_bounds(t.bounds), c.kpm_moments,
                        c.kpm_vectors, derive_seed(c.seed, {4, static_cast<std::uint64_t>(d)}),
                        c.workers);
  t.dos = dos_estimate(mu, c.kpm_grid);
  t.initial_energy = H.op.expectation(initial_state(m.basis));
  std::optional<double> center;
  if (c.shell_recenter) center = t.initial_energy;
  t.shell = select_shell(t.dos, c.shell_lower_fraction, c.shell_upper_fraction, center);

  auto csv = run.open("dos.csv");
  write_dos_csv(t.dos, csv);
  json j = shell_json(t, c.shell_lower_fraction, c.shell_upper_fraction);
  j["density_index"] = d;
  run.write_json("shell.json", j);
  return 0;
}

int cmd_oracle_check(Run& run) {
  const RunConfig& c = run.config();
  const int d = checked_density(c, run.density_bin());
  const Model m = build_model(c);
  const AssembledHamiltonian H = build_hamiltonian(m, realization_geometry(c, d, 0), c);
  const auto eig = exact_diagonalize(H.op, c.ed_max_dim);
  const ThermalRun t =
      run_thermal(m, H.op, c, d, c.shell_lower_fraction, c.shell_upper_fraction);
  const ClusterPopulations micro = microcanonical_average(eig, t.shell.shell, m.basis);

  const Eigen::VectorXd residual = t.estimate.mean - micro;
  bool ok = true;
  Eigen::VectorXd allowed(residual.size());
  for (Index k = 0; k < residual.size(); ++k) {
    allowed[k] = std::max(c.oracle_tolerance, 2.0 * t.estimate.stderr_mean[k]);
    ok = ok && std::abs(residual[k]) <= allowed[k];
  }
  // Shell counting against the CDF interval (not the recentered shell).
  const Index dim = H.op.dim();
  const Index inside = count_in_interval(eig, t.shell.lower_energy, t.shell.upper_energy);
  const double expected =
      (c.shell_upper_fraction - c.shell_lower_fraction) * static_cast<double>(dim);
  const double count_tol = std::max(2.0, 0.02 * static_cast<double>(dim));

  json j;
  j["density_index"] = d;
  j["dim"] = dim;
  j["cluster_labels"] = labels(m.basis.n_clusters());
  j["shell"] = shell_json(t, c.shell_lower_fraction, c.shell_upper_fraction);
  j["eigenstates_in_shell"] =
      count_in_interval(eig, t.shell.shell.lower(), t.shell.shell.upper());
  j["typicality"] = to_json(t.estimate.mean);
  j["typicality_stderr"] = to_json(t.estimate.stderr_mean);
  j["microcanonical"] = to_json(micro);
  j["residual"] = to_json(residual);
  j["allowed"] = to_json(allowed);
  j["within_tolerance"] = ok;
  j["cdf_interval_count"] = inside;
  j["cdf_interval_expected"] = expected;
  j["cdf_interval_within_tolerance"] = std::abs(static_cast<double>(inside) - expected) <= count_tol;
  run.write_json("oracle_check.json", j);

  std::printf("%-6s %12s %12s %12s %12s\n", "slot", "typicality", "microcan", "residual",
              "allowed");
  for (Index k = 0; k < residual.size(); ++k)
    std::printf("%-6s %12.6f %12.6f %12.6f %12.6f\n",
                cluster_label(static_cast<int>(k), m.basis.n_clusters()).c_str(),
                t.estimate.mean[k], micro[k], residual[k], allowed[k]);
  if (!ok) throw NumericalError("typicality estimate outside the microcanonical tolerance");
  return 0;
}

std::vector<expdata::SpectrumShot> load_shots(const RunConfig& c) {
  std::vector<expdata::SpectrumShot> shots;
  if (!c.data_csv.empty()) {
    shots = expdata::read_long_csv(c.data_csv);
  } else if (!c.shots_manifest.empty()) {
    shots = expdata::read_manifest(c.shots_manifest);
  } else {
    throw InputError("reduce-data needs data_csv or shots_manifest");
  }
  for (std::size_t s = 0; s < shots.size(); ++s) {
    const auto& f = shots[s].freq_ghz;
    if (f.size() < 2) throw InputError("shot " + std::to_string(s) + " has fewer than 2 samples");
    if (f.minCoeff() < c.scan_min_ghz || f.maxCoeff() > c.scan_max_ghz)
      throw InputError("shot " + std::to_string(s) + " leaves the scan range");
  }
  return shots;
}

int cmd_reduce_data(Run& run) {
  const RunConfig& c = run.config();
  const auto shots = load_shots(c);
  const int n_regions = c.manifold.n_clusters;

  // Boundary suggestion from the mean spectrum, when all shots share a grid.
  json suggestion;
  bool shared_grid = true;
  for (const auto& s : shots) shared_grid = shared_grid && s.freq_ghz == shots.front().freq_ghz;
  if (shared_grid) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(shots.front().signal.size());
    for (const auto& s : shots) mean += s.signal;
    mean /= static_cast<double>(shots.size());
    const auto b = expdata::suggest_boundaries(
        shots.front().freq_ghz, mean, rad_per_us_to_mhz(c.manifold.cluster_spacing) * 1e-3,
        n_regions);
    suggestion["edges_ghz"] = to_json(b.edges);
  } else {
    suggestion["edges_ghz"] = nullptr;
    suggestion["note"] = "shots do not share a frequency grid";
  }
  run.write_json("suggested_regions.json", suggestion);

  if (c.region_edges_ghz.empty())
    throw InputError("region_edges_ghz is required; see suggested_regions.json");
  expdata::RegionBoundaries b;
  b.edges = Eigen::Map<const Eigen::VectorXd>(c.region_edges_ghz.data(),
                                              static_cast<Index>(c.region_edges_ghz.size()));
  b.validate();
  if (b.n_regions() != n_regions)
    throw InputError("region_edges_ghz must define " + std::to_string(n_regions) + " regions");

  const Eigen::VectorXd g =
      c.couplings.empty()
          ? expdata::measured_couplings()
          : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                c.couplings.data(), static_cast<Index>(c.couplings.size())));
  expdata::ReductionOptions ro;
  ro.n_bins = c.density_bins;
  ro.normalize_per_shot = c.normalize_per_shot;
  const auto bins = expdata::reduce(shots, b, g, ro);

  json out = json::array();
  for (const auto& r : bins) {
    json j;
    j["bin_index"] = r.bin_index;
    j["n_shots"] = r.n_shots;
    j["populations"] = to_json(r.populations);
    j["stderr"] = to_json(r.errors.stderr_mean);
    j["stderr_defined"] = r.errors.defined;
    j["clamped"] = r.clamped;
    j["empty_regions"] = r.empty_regions;
    out.push_back(std::move(j));
  }
  json result;
  result["cluster_labels"] = labels(n_regions);
  result["bins"] = std::move(out);
  run.write_json("reduced.json", result);
  return 0;
}

json read_json(const std::string& path) {
  if (path.empty()) throw InputError("compare needs experimental_json and predicted_json");
  std::ifstream f(path);
  if (!f) throw InputError("cannot read " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

int cmd_compare(Run& run) {
  const RunConfig& c = run.config();
  const int bin = run.density_bin();
  const json exp = read_json(c.experimental_json);
  const json pred = read_json(c.predicted_json);
  try {
    const json& bins = exp.at("result").at("bins");
    if (bin < 0 || bin >= static_cast<int>(bins.size()))
      throw InputError("--density-bin outside the reduced bins");
    const Eigen::VectorXd p_exp = vector_from_json(bins[bin].at("populations"), "populations");
    const Eigen::VectorXd err = vector_from_json(bins[bin].at("stderr"), "stderr");

    const json& r = pred.at("result");
    Eigen::VectorXd p_pred;
    std::string source;
    if (r.contains("rows") && r.contains("thermal")) {
      // density-sweep output: compare against the density row with the same
      // index and against the thermal row.
      const json& rows = r.at("rows");
      if (bin >= static_cast<int>(rows.size()))
        throw InputError("--density-bin outside the sweep rows");
      p_pred = vector_from_json(rows[bin].at("populations"), "populations");
      source = "density-sweep row";
    } else {
      p_pred = vector_from_json(r.at("populations"), "populations");
      source = pred.value("command", std::string("prediction"));
    }
    if (p_pred.size() != p_exp.size() || err.size() != p_exp.size())
      throw InputError("experimental and predicted cluster counts differ");

    const auto cmp = expdata::compare(p_exp, err, p_pred);
    json j;
    j["bin_index"] = bin;
    j["prediction"] = source;
    j["cluster_labels"] = labels(static_cast<int>(p_exp.size()));
    j["experimental"] = to_json(p_exp);
    j["stderr"] = to_json(err);
    j["predicted"] = to_json(p_pred);
    j["total_variation"] = cmp.total_variation;
    j["residual_sigma"] = to_json(cmp.residual_sigma);
    j["initial_cluster_excess"] = cmp.initial_cluster_excess;
    if (r.contains("thermal") && r.at("thermal").is_array() && !r.at("thermal").empty()) {
      const Eigen::VectorXd p_th =
          vector_from_json(r.at("thermal").back().at("populations"), "thermal populations");
      if (p_th.size() == p_exp.size()) {
        const auto th = expdata::compare(p_exp, err, p_th);
        j["thermal_total_variation"] = th.total_variation;
        j["thermal_initial_cluster_excess"] = th.initial_cluster_excess;
      }
    }
    run.write_json("compare.json", j);

    std::ostringstream table;
    table << "cluster  experimental  stderr      predicted   residual/sigma\n";
    for (Index k = 0; k < p_exp.size(); ++k) {
      char line[128];
      std::snprintf(line, sizeof line, "%-8s %-13.6f %-11.6f %-11.6f %.3f\n",
                    cluster_label(static_cast<int>(k), static_cast<int>(p_exp.size())).c_str(),
                    p_exp[k], err[k], p_pred[k], cmp.residual_sigma[k]);
      table << line;
    }
    table << "total variation " << format17(cmp.total_variation) << "\n"
          << "initial-cluster excess " << format17(cmp.initial_cluster_excess) << "\n";
    std::cout << table.str();
    run.open("compare.txt") << table.str();
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed input json: ") + e.what());
  }
  return 0;
}

int cmd_density_sweep(Run& run) {
  const RunConfig& c = run.config();
  const Model m = build_model(c);
  const SweepResult s = run_density_sweep(m, c);
  const int n = m.basis.n_clusters();

  json rows = json::array();
  for (const auto& r : s.rows) {
    json j;
    j["density_cm3"] = r.density_cm3;
    j["realizations"] = r.realizations;
    j["equilibrated"] = r.equilibrated;
    j["populations"] = to_json(r.mean);
    j["stderr"] = to_json(r.stderr_mean);
    rows.push_back(std::move(j));
  }
  json thermal = json::array();
  for (std::size_t i = 0; i < s.thermal.size(); ++i) {
    json j = thermal_json(s.thermal[i], c.shell_lower_fraction, c.shell_upper_fraction);
    j["density_index"] = s.thermal_density_indices[i];
    thermal.push_back(std::move(j));
  }
  json result;
  result["dim"] = m.basis.dim();
  result["cluster_labels"] = labels(n);
  result["rows"] = std::move(rows);
  result["thermal"] = std::move(thermal);
  run.write_json("density_sweep.json", result);

  auto csv = run.open("density_sweep.csv");
  csv << "kind,density_cm3";
  for (int k = 0; k < n; ++k) csv << ",p_" << cluster_label(k, n);
  for (int k = 0; k < n; ++k) csv << ",se_" << cluster_label(k, n);
  csv << '\n';
  auto emit = [&](const char* kind, double density, const Eigen::VectorXd& p,
                  const Eigen::VectorXd& se) {
    csv << kind << ',' << format17(density);
    for (int k = 0; k < n; ++k) csv << ',' << format17(p[k]);
    for (int k = 0; k < n; ++k) csv << ',' << format17(se[k]);
    csv << '\n';
  };
  for (const auto& r : s.rows) emit("equilibrium", r.density_cm3, r.mean, r.stderr_mean);
  for (std::size_t i = 0; i < s.thermal.size(); ++i)
    emit("thermal", c.densities_cm3[static_cast<std::size_t>(s.thermal_density_indices[i])],
         s.thermal[i].estimate.mean, s.thermal[i].estimate.stderr_mean);
  return 0;
}

int report(const char* kind, const std::string& message, int code) {
  json e;
  e["error"] = {{"kind", kind}, {"message", message}};
  e["version"] = version();
  e["exit_code"] = code;
  std::cerr << e.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stark-manifold thermalization simulator"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  Options opt;
  using Handler = int (*)(Run&);
  const std::vector<std::pair<std::string, std::pair<std::string, Handler>>> commands = {
      {"basis", {"Enumerate the truncated product basis", cmd_basis}},
      {"evolve", {"RK4 evolution of the initial state for one geometry", cmd_evolve}},
      {"thermal", {"Typicality prediction of the thermal populations", cmd_thermal}},
      {"dos", {"KPM density of states and energy shell", cmd_dos}},
      {"oracle-check", {"Typicality versus exact microcanonical averages", cmd_oracle_check}},
      {"reduce-data", {"Reduce experimental spectra to cluster populations", cmd_reduce_data}},
      {"compare", {"Compare reduced data against a prediction", cmd_compare}},
      {"density-sweep", {"Equilibrium populations across the density grid", cmd_density_sweep}},
  };
  std::vector<std::pair<CLI::App*, Handler>> subs;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", opt.config, "Key-value configuration file")->required();
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--seed", opt.seed, "Override the configured seed");
    sub->add_option("--workers", opt.workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--density-bin", opt.density_bin, "Density index or reduced-data bin");
    subs.emplace_back(sub, entry.second);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("input", e.what(), 1);
  }

  for (auto& [sub, handler] : subs) {
    if (!sub->parsed()) continue;
    try {
      Run run(sub->get_name(), opt);
      return handler(run);
    } catch (const InputError& e) {
      return report("input", e.what(), 1);
    } catch (const NumericalError& e) {
      return report("numerical", e.what(), 2);
    } catch (const std::exception& e) {
      return report("numerical", e.what(), 2);
    }
  }
  return 1;
}
