#include "stark/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace stark {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (trim(v.substr(used)).empty() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw InputError("config key '" + key + "': expected a number, got '" + v + "'");
}

long long to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw InputError("config key '" + key + "': expected an integer");
  return static_cast<long long>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InputError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell = trim(cell);
    if (!cell.empty()) out.push_back(to_double(key, cell));
  }
  return out;
}

std::vector<double> scaled(std::vector<double> v, double factor) {
  for (auto& x : v) x *= factor;
  return v;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  RunConfig c;
  auto path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
  };
  const double w = kTwoPi;  // MHz -> rad/us

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"cluster_spacing_mhz", [&](auto& k, auto& v) { c.manifold.cluster_spacing = w * to_double(k, v); }},
      {"anharmonicity_mhz", [&](auto& k, auto& v) { c.manifold.anharmonicity = w * to_double(k, v); }},
      {"intra_offsets_mhz", [&](auto& k, auto& v) { c.manifold.intra_offsets = scaled(to_list(k, v), w); }},
      {"n_clusters", [&](auto& k, auto& v) { c.manifold.n_clusters = static_cast<int>(to_int(k, v)); }},
      {"max_offset_ratio", [&](auto& k, auto& v) { c.manifold.max_offset_ratio = to_double(k, v); }},
      {"c3_inter_mhz_um3", [&](auto& k, auto& v) { c.c3_inter_mhz_um3 = to_double(k, v); }},
      {"dipole_ratio", [&](auto& k, auto& v) { c.dipoles.ratio = to_double(k, v); }},
      {"dipole_spread", [&](auto& k, auto& v) { c.dipoles.spread = to_double(k, v); }},
      {"dipole_random_signs", [&](auto& k, auto& v) { c.dipoles.random_signs = to_bool(k, v); }},
      {"dipole_matrix_csv", [&](auto&, auto& v) { c.dipole_matrix_csv = path(v); }},
      {"n_atoms", [&](auto& k, auto& v) { c.n_atoms = static_cast<int>(to_int(k, v)); }},
      {"densities_cm3", [&](auto& k, auto& v) { c.densities_cm3 = to_list(k, v); }},
      {"realizations", [&](auto& k, auto& v) { c.realizations = static_cast<int>(to_int(k, v)); }},
      {"exclusion_um", [&](auto& k, auto& v) { c.exclusion_um = to_double(k, v); }},
      {"window_mhz", [&](auto& k, auto& v) { c.window = w * to_double(k, v); }},
      {"reference_mhz", [&](auto& k, auto& v) { c.reference = w * to_double(k, v); }},
      {"max_dim", [&](auto& k, auto& v) { c.max_dim = to_int(k, v); }},
      {"three_body", [&](auto& k, auto& v) { c.hamiltonian.three_body = to_bool(k, v); }},
      {"three_body_floor_mhz", [&](auto& k, auto& v) { c.hamiltonian.denominator_floor = w * to_double(k, v); }},
      {"t_total_us", [&](auto& k, auto& v) { c.t_total_us = to_double(k, v); }},
      {"dt_us", [&](auto& k, auto& v) { c.dt_us = to_double(k, v); }},
      {"dt_stability_fraction", [&](auto& k, auto& v) { c.time_step.stability_fraction = to_double(k, v); }},
      {"dt_phase_tolerance", [&](auto& k, auto& v) { c.time_step.phase_tolerance = to_double(k, v); }},
      {"dt_norm_tolerance", [&](auto& k, auto& v) { c.time_step.norm_tolerance = to_double(k, v); }},
      {"sample_interval_us", [&](auto& k, auto& v) { c.sample_interval_us = to_double(k, v); }},
      {"eq_window_us", [&](auto& k, auto& v) { c.eq_window_us = to_double(k, v); }},
      {"eq_tol", [&](auto& k, auto& v) { c.eq_tol = to_double(k, v); }},
      {"typicality_samples", [&](auto& k, auto& v) { c.typicality_samples = static_cast<int>(to_int(k, v)); }},
      {"typicality_stop_stderr", [&](auto& k, auto& v) { c.typicality_stop_stderr = to_double(k, v); }},
      {"typicality_min_samples", [&](auto& k, auto& v) { c.typicality_min_samples = static_cast<int>(to_int(k, v)); }},
      {"shell_lower_fraction", [&](auto& k, auto& v) { c.shell_lower_fraction = to_double(k, v); }},
      {"shell_upper_fraction", [&](auto& k, auto& v) { c.shell_upper_fraction = to_double(k, v); }},
      {"shell_recenter", [&](auto& k, auto& v) { c.shell_recenter = to_bool(k, v); }},
      {"shell_sweep_widths", [&](auto& k, auto& v) { c.shell_sweep_widths = to_list(k, v); }},
      {"sweep_thermal_all_densities", [&](auto& k, auto& v) { c.sweep_thermal_all_densities = to_bool(k, v); }},
      {"kpm_moments", [&](auto& k, auto& v) { c.kpm_moments = static_cast<int>(to_int(k, v)); }},
      {"kpm_vectors", [&](auto& k, auto& v) { c.kpm_vectors = static_cast<int>(to_int(k, v)); }},
      {"kpm_grid", [&](auto& k, auto& v) { c.kpm_grid = static_cast<int>(to_int(k, v)); }},
      {"ed_max_dim", [&](auto& k, auto& v) { c.ed_max_dim = to_int(k, v); }},
      {"oracle_tolerance", [&](auto& k, auto& v) { c.oracle_tolerance = to_double(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"workers", [&](auto& k, auto& v) { c.workers = static_cast<int>(to_int(k, v)); }},
      {"data_csv", [&](auto&, auto& v) { c.data_csv = path(v); }},
      {"shots_manifest", [&](auto&, auto& v) { c.shots_manifest = path(v); }},
      {"region_edges_ghz", [&](auto& k, auto& v) { c.region_edges_ghz = to_list(k, v); }},
      {"couplings", [&](auto& k, auto& v) { c.couplings = to_list(k, v); }},
      {"density_bins", [&](auto& k, auto& v) { c.density_bins = static_cast<int>(to_int(k, v)); }},
      {"normalize_per_shot", [&](auto& k, auto& v) { c.normalize_per_shot = to_bool(k, v); }},
      {"scan_min_ghz", [&](auto& k, auto& v) { c.scan_min_ghz = to_double(k, v); }},
      {"scan_max_ghz", [&](auto& k, auto& v) { c.scan_max_ghz = to_double(k, v); }},
      {"experimental_json", [&](auto&, auto& v) { c.experimental_json = path(v); }},
      {"predicted_json", [&](auto&, auto& v) { c.predicted_json = path(v); }},
  };

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end())
      throw InputError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(key, value);
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw InputError("invalid config: " + what);
  };
  require(c.n_atoms >= 1, "n_atoms >= 1");
  require(c.c3_inter_mhz_um3 >= 0.0, "c3_inter_mhz_um3 >= 0");
  require(!c.densities_cm3.empty(), "densities_cm3 must not be empty");
  for (double d : c.densities_cm3) require(d > 0.0, "densities must be > 0");
  require(c.realizations >= 1, "realizations >= 1");
  require(c.exclusion_um >= 0.0, "exclusion_um >= 0");
  require(c.window_value() > 0.0, "window_mhz > 0");
  require(c.max_dim >= 1, "max_dim >= 1");
  require(c.hamiltonian.denominator_floor > 0.0, "three_body_floor_mhz > 0");
  require(c.t_total_us > 0.0, "t_total_us > 0");
  require(c.dt_us >= 0.0, "dt_us >= 0");
  require(c.time_step.stability_fraction > 0.0 &&
              c.time_step.stability_fraction <= kRk4StabilityLimit,
          "dt_stability_fraction in (0, 2.8]");
  require(c.time_step.phase_tolerance >= 0.0, "dt_phase_tolerance >= 0");
  require(c.time_step.norm_tolerance >= 0.0, "dt_norm_tolerance >= 0");
  require(c.sample_interval_us > 0.0, "sample_interval_us > 0");
  require(c.eq_window_us > 0.0 && c.eq_tol > 0.0, "eq_window_us and eq_tol > 0");
  require(c.typicality_samples >= 2, "typicality_samples >= 2");
  require(c.shell_lower_fraction > 0.0 && c.shell_lower_fraction < c.shell_upper_fraction &&
              c.shell_upper_fraction < 1.0,
          "0 < shell_lower_fraction < shell_upper_fraction < 1");
  for (double f : c.shell_sweep_widths) require(f > 0.0 && f < 1.0, "shell sweep widths in (0, 1)");
  require(c.kpm_moments >= 2 && c.kpm_vectors >= 1 && c.kpm_grid >= 2, "KPM sizes");
  require(c.workers >= 1, "workers >= 1");
  require(c.density_bins >= 1, "density_bins >= 1");
  require(c.scan_min_ghz < c.scan_max_ghz, "scan_min_ghz < scan_max_ghz");
}

nlohmann::ordered_json RunConfig::to_json() const {
  const double mhz = 1.0 / kTwoPi;
  nlohmann::ordered_json j;
  j["cluster_spacing_mhz"] = manifold.cluster_spacing * mhz;
  j["anharmonicity_mhz"] = manifold.anharmonicity * mhz;
  j["intra_offsets_mhz"] = scaled(manifold.intra_offsets, mhz);
  j["n_clusters"] = manifold.n_clusters;
  j["max_offset_ratio"] = manifold.max_offset_ratio;
  j["c3_inter_mhz_um3"] = c3_inter_mhz_um3;
  j["dipole_ratio"] = dipoles.ratio;
  j["dipole_spread"] = dipoles.spread;
  j["dipole_random_signs"] = dipoles.random_signs;
  j["dipole_matrix_csv"] = dipole_matrix_csv;
  j["n_atoms"] = n_atoms;
  j["densities_cm3"] = densities_cm3;
  j["realizations"] = realizations;
  j["exclusion_um"] = exclusion_um;
  j["window_mhz"] = window_value() * mhz;
  j["reference_mhz"] = reference ? nlohmann::ordered_json(*reference * mhz) : nullptr;
  j["max_dim"] = max_dim;
  j["three_body"] = hamiltonian.three_body;
  j["three_body_floor_mhz"] = hamiltonian.denominator_floor * mhz;
  j["t_total_us"] = t_total_us;
  j["dt_us"] = dt_us;
  j["dt_stability_fraction"] = time_step.stability_fraction;
  j["dt_phase_tolerance"] = time_step.phase_tolerance;
  j["dt_norm_tolerance"] = time_step.norm_tolerance;
  j["sample_interval_us"] = sample_interval_us;
  j["eq_window_us"] = eq_window_us;
  j["eq_tol"] = eq_tol;
  j["typicality_samples"] = typicality_samples;
  j["typicality_stop_stderr"] = typicality_stop_stderr;
  j["typicality_min_samples"] = typicality_min_samples;
  j["shell_lower_fraction"] = shell_lower_fraction;
  j["shell_upper_fraction"] = shell_upper_fraction;
  j["shell_recenter"] = shell_recenter;
  j["shell_sweep_widths"] = shell_sweep_widths;
  j["sweep_thermal_all_densities"] = sweep_thermal_all_densities;
  j["kpm_moments"] = kpm_moments;
  j["kpm_vectors"] = kpm_vectors;
  j["kpm_grid"] = kpm_grid;
  j["ed_max_dim"] = ed_max_dim;
  j["oracle_tolerance"] = oracle_tolerance;
  j["seed"] = seed;
  j["data_csv"] = data_csv;
  j["shots_manifest"] = shots_manifest;
  j["region_edges_ghz"] = region_edges_ghz;
  j["couplings"] = couplings;
  j["density_bins"] = density_bins;
  j["normalize_per_shot"] = normalize_per_shot;
  j["scan_min_ghz"] = scan_min_ghz;
  j["scan_max_ghz"] = scan_max_ghz;
  j["experimental_json"] = experimental_json;
  j["predicted_json"] = predicted_json;
  return j;
}

}  // namespace stark
