#include "stark/expdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace stark::expdata {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return cells;
}

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("bad number '" + s + "' in " + where);
  }
}

void check_spectrum(const Eigen::VectorXd& f, const Eigen::VectorXd& s) {
  if (f.size() != s.size()) throw InputError("frequency and signal lengths differ");
  if (f.size() < 2) throw InputError("spectrum needs at least two samples");
  for (Index k = 1; k < f.size(); ++k)
    if (!(f[k] > f[k - 1])) throw InputError("spectrum frequencies must strictly increase");
}

// Piecewise-linear signal value at x inside [f.front(), f.back()].
double interpolate(const Eigen::VectorXd& f, const Eigen::VectorXd& s, double x) {
  const auto* begin = f.data();
  const auto* end = f.data() + f.size();
  const auto* it = std::upper_bound(begin, end, x);
  if (it == begin) return s[0];
  if (it == end) return s[f.size() - 1];
  const Index j = it - begin;
  const double t = (x - f[j - 1]) / (f[j] - f[j - 1]);
  return s[j - 1] + t * (s[j] - s[j - 1]);
}

double trapezoid(const Eigen::VectorXd& f, const Eigen::VectorXd& s, double lo, double hi,
                 bool* empty) {
  double area = 0.0;
  double x0 = lo;
  double y0 = interpolate(f, s, lo);
  *empty = true;
  const auto* begin = f.data();
  for (const auto* it = std::upper_bound(begin, begin + f.size(), lo);
       it != begin + f.size() && *it < hi; ++it) {
    const double y1 = s[it - begin];
    area += 0.5 * (*it - x0) * (y0 + y1);
    x0 = *it;
    y0 = y1;
    *empty = false;
  }
  area += 0.5 * (hi - x0) * (y0 + interpolate(f, s, hi));
  return area;
}

SpectrumShot make_shot(std::vector<double> f, std::vector<double> s,
                       std::optional<double> total) {
  SpectrumShot shot;
  shot.freq_ghz = Eigen::Map<Eigen::VectorXd>(f.data(), static_cast<Index>(f.size()));
  shot.signal = Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Index>(s.size()));
  check_spectrum(shot.freq_ghz, shot.signal);
  if (total) {
    shot.total_signal = *total;
  } else {
    bool empty = false;
    shot.total_signal = trapezoid(shot.freq_ghz, shot.signal, shot.freq_ghz[0],
                                  shot.freq_ghz[shot.freq_ghz.size() - 1], &empty);
  }
  return shot;
}

}  // namespace

void RegionBoundaries::validate() const {
  if (edges.size() < 2) throw InputError("need at least one region");
  for (Index k = 1; k < edges.size(); ++k)
    if (!(edges[k] > edges[k - 1])) throw InputError("region edges must strictly increase");
}

Eigen::VectorXd measured_couplings() {
  Eigen::VectorXd g(13);
  g << 0.005, 0.014, 0.014, 0.023, 0.060, 0.098, 0.125, 0.132, 0.159, 0.103, 0.080, 0.087, 0.087;
  return g;
}

std::vector<std::vector<std::size_t>> bin_by_total_signal(const std::vector<SpectrumShot>& shots,
                                                          int n_bins) {
  if (n_bins < 1) throw InputError("need at least one bin");
  const std::size_t n = shots.size();
  if (n < static_cast<std::size_t>(n_bins))
    throw InputError("fewer shots (" + std::to_string(n) + ") than bins (" +
                     std::to_string(n_bins) + ")");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return shots[a].total_signal < shots[b].total_signal;
  });
  std::vector<std::vector<std::size_t>> bins(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    const std::size_t first = b * n / n_bins;
    const std::size_t last = (b + 1) * n / n_bins;
    bins[b].assign(order.begin() + first, order.begin() + last);
  }
  return bins;
}

RegionIntegrals integrate_regions(const Eigen::VectorXd& f, const Eigen::VectorXd& s,
                                  const RegionBoundaries& boundaries) {
  check_spectrum(f, s);
  boundaries.validate();
  const auto& e = boundaries.edges;
  if (e[0] < f[0] || e[e.size() - 1] > f[f.size() - 1])
    throw InputError("region boundaries extend beyond the scanned frequency range");
  RegionIntegrals out;
  out.values.resize(boundaries.n_regions());
  for (int r = 0; r < boundaries.n_regions(); ++r) {
    bool empty = false;
    out.values[r] = trapezoid(f, s, e[r], e[r + 1], &empty);
    if (empty) out.empty_regions.push_back(r);
  }
  return out;
}

ScaledPopulations scale_and_normalize(const Eigen::VectorXd& integrals,
                                      const Eigen::VectorXd& couplings) {
  if (integrals.size() != couplings.size())
    throw InputError("integrals and couplings differ in length");
  if (!(couplings.array() > 0.0).all() || !couplings.allFinite())
    throw InputError("couplings must be finite and > 0");
  if (!integrals.allFinite()) throw InputError("non-finite region integral");
  ScaledPopulations out;
  out.populations = integrals.cwiseQuotient(couplings);
  for (Index c = 0; c < out.populations.size(); ++c) {
    if (out.populations[c] < 0.0) {
      out.populations[c] = 0.0;
      ++out.clamped;
    }
  }
  const double total = out.populations.sum();
  if (!(total > 0.0)) throw InputError("all scaled region integrals are zero");
  out.populations /= total;
  return out;
}

ErrorBars stderr_per_cluster(const Eigen::MatrixXd& p) {
  ErrorBars out;
  const Index n = p.cols();
  if (n < 2) {
    out.defined = false;
    out.stderr_mean = Eigen::VectorXd::Constant(p.rows(), std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  const Eigen::VectorXd mean = p.rowwise().mean();
  const Eigen::MatrixXd centered = p.colwise() - mean;
  out.stderr_mean = (centered.rowwise().squaredNorm() / double(n - 1)).cwiseSqrt() /
                    std::sqrt(double(n));
  return out;
}

Comparison compare(const ClusterPopulations& experimental, const Eigen::VectorXd& errors,
                   const ClusterPopulations& predicted) {
  if (experimental.size() != predicted.size() || errors.size() != experimental.size())
    throw InputError("distributions differ in length");
  Comparison c;
  const Eigen::VectorXd diff = experimental - predicted;
  c.total_variation = 0.5 * diff.cwiseAbs().sum();
  c.residual_sigma.resize(diff.size());
  for (Index k = 0; k < diff.size(); ++k) {
    if (diff[k] == 0.0)
      c.residual_sigma[k] = 0.0;
    else
      c.residual_sigma[k] = errors[k] > 0.0 ? diff[k] / errors[k]
                                            : std::copysign(INFINITY, diff[k]);
  }
  c.initial_cluster_excess = diff[(diff.size() - 1) / 2];
  return c;
}

std::vector<BinResult> reduce(const std::vector<SpectrumShot>& shots,
                              const RegionBoundaries& boundaries,
                              const Eigen::VectorXd& couplings, const ReductionOptions& opt) {
  if (couplings.size() != boundaries.n_regions())
    throw InputError("need one coupling per region");
  const auto bins = bin_by_total_signal(shots, opt.n_bins);
  std::vector<BinResult> results;
  for (int b = 0; b < opt.n_bins; ++b) {
    const auto& members = bins[b];
    BinResult r;
    r.bin_index = b;
    r.n_shots = static_cast<int>(members.size());
    Eigen::MatrixXd per_shot(couplings.size(), r.n_shots);
    Eigen::VectorXd sum_integrals = Eigen::VectorXd::Zero(couplings.size());
    std::vector<bool> seen_empty(couplings.size(), false);
    for (int k = 0; k < r.n_shots; ++k) {
      const auto& shot = shots[members[k]];
      const RegionIntegrals ri = integrate_regions(shot.freq_ghz, shot.signal, boundaries);
      for (int e : ri.empty_regions) seen_empty[e] = true;
      sum_integrals += ri.values;
      const ScaledPopulations sp = scale_and_normalize(ri.values, couplings);
      per_shot.col(k) = sp.populations;
      if (opt.normalize_per_shot) r.clamped += sp.clamped;
    }
    if (opt.normalize_per_shot) {
      r.populations = per_shot.rowwise().mean();
    } else {
      const ScaledPopulations sp = scale_and_normalize(sum_integrals / r.n_shots, couplings);
      r.populations = sp.populations;
      r.clamped = sp.clamped;
    }
    r.errors = stderr_per_cluster(per_shot);
    for (std::size_t e = 0; e < seen_empty.size(); ++e)
      if (seen_empty[e]) r.empty_regions.push_back(static_cast<int>(e));
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<SpectrumShot> read_long_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + " is empty");
  const auto header = split_csv(line);
  auto column = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int c_id = column("shot_id"), c_f = column("freq_ghz"), c_s = column("signal"),
            c_t = column("total_signal");
  if (c_id < 0 || c_f < 0 || c_s < 0)
    throw InputError(path.string() + " needs columns shot_id,freq_ghz,signal");

  struct Acc {
    std::vector<double> f, s;
    std::optional<double> total;
  };
  std::map<std::string, Acc> by_id;
  std::vector<std::string> order;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (static_cast<int>(cells.size()) < static_cast<int>(header.size()))
      throw InputError("short row at " + where);
    auto [it, inserted] = by_id.try_emplace(cells[c_id]);
    if (inserted) order.push_back(cells[c_id]);
    it->second.f.push_back(parse_number(cells[c_f], where));
    it->second.s.push_back(parse_number(cells[c_s], where));
    if (c_t >= 0) it->second.total = parse_number(cells[c_t], where);
  }
  std::vector<SpectrumShot> shots;
  for (const auto& id : order) {
    auto& a = by_id[id];
    shots.push_back(make_shot(std::move(a.f), std::move(a.s), a.total));
  }
  if (shots.empty()) throw InputError(path.string() + " holds no shots");
  return shots;
}

std::vector<SpectrumShot> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<SpectrumShot> shots;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv(line);
    std::filesystem::path shot_path = cells.at(0);
    if (shot_path.is_relative()) shot_path = path.parent_path() / shot_path;
    std::optional<double> total;
    if (cells.size() > 1 && !cells[1].empty()) total = parse_number(cells[1], path.string());

    std::ifstream sin(shot_path);
    if (!sin) throw InputError("cannot open " + shot_path.string());
    std::string row;
    std::vector<double> f, s;
    bool header = true;
    while (std::getline(sin, row)) {
      if (row.empty() || row[0] == '#') continue;
      if (header) {
        header = false;
        if (row.find("freq") != std::string::npos) continue;
      }
      const auto c = split_csv(row);
      if (c.size() < 2) throw InputError("short row in " + shot_path.string());
      f.push_back(parse_number(c[0], shot_path.string()));
      s.push_back(parse_number(c[1], shot_path.string()));
    }
    shots.push_back(make_shot(std::move(f), std::move(s), total));
  }
  if (shots.empty()) throw InputError(path.string() + " lists no shots");
  return shots;
}

RegionBoundaries suggest_boundaries(const Eigen::VectorXd& f, const Eigen::VectorXd& s,
                                    double period, int n_regions) {
  check_spectrum(f, s);
  if (!(period > 0.0) || n_regions < 1) throw InputError("bad comb parameters");
  const double fmin = f[0];
  const double fmax = f[f.size() - 1];
  const int steps = 200;
  double best_phase = 0.0;
  double best_score = std::numeric_limits<double>::infinity();
  for (int k = 0; k < steps; ++k) {
    const double phase = period * k / steps;
    double score = 0.0;
    int n = 0;
    for (double x = fmin + phase; x <= fmax; x += period, ++n) score += interpolate(f, s, x);
    if (n > 0 && score / n < best_score) {
      best_score = score / n;
      best_phase = phase;
    }
  }
  std::vector<double> edges;
  for (double x = fmin + best_phase; x <= fmax + 1e-12; x += period) edges.push_back(x);
  if (static_cast<int>(edges.size()) < n_regions + 1)
    throw InputError("scan range too narrow for " + std::to_string(n_regions) + " regions");

  int best_start = 0;
  double best_sum = -std::numeric_limits<double>::infinity();
  for (std::size_t start = 0; start + n_regions < edges.size(); ++start) {
    bool empty = false;
    const double sum = trapezoid(f, s, edges[start], edges[start + n_regions], &empty);
    if (sum > best_sum) {
      best_sum = sum;
      best_start = static_cast<int>(start);
    }
  }
  RegionBoundaries out;
  out.edges.resize(n_regions + 1);
  for (int k = 0; k <= n_regions; ++k) out.edges[k] = edges[best_start + k];
  return out;
}

}  // namespace stark::expdata
