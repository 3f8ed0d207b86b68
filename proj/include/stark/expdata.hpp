#pragma once

#include "stark/common.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace stark::expdata {

/// One microwave scan: signal versus frequency (GHz), ascending.
struct SpectrumShot {
  Eigen::VectorXd freq_ghz;
  Eigen::VectorXd signal;
  double total_signal = 0.0;  // proxy for the Rydberg density
};

/// Contiguous frequency intervals, one per cluster; region k spans
/// [edges[k], edges[k+1]].
struct RegionBoundaries {
  Eigen::VectorXd edges;

  int n_regions() const { return static_cast<int>(edges.size()) - 1; }
  /// Throws InputError unless edges strictly increase.
  void validate() const;
};

/// Coupling strengths of clusters -6..+6 to the d states.
Eigen::VectorXd measured_couplings();

/// Shot indices grouped into n_bins quantile bins of total_signal, ascending.
/// Ties keep shot order. Bin b holds sorted positions [b n / B, (b + 1) n / B).
std::vector<std::vector<std::size_t>> bin_by_total_signal(const std::vector<SpectrumShot>& shots,
                                                          int n_bins);

struct RegionIntegrals {
  Eigen::VectorXd values;
  std::vector<int> empty_regions;  // regions with no sample strictly inside
};

/// Trapezoidal integral of the piecewise-linear signal over each region.
/// Negative values are kept.
RegionIntegrals integrate_regions(const Eigen::VectorXd& freq_ghz, const Eigen::VectorXd& signal,
                                  const RegionBoundaries& boundaries);

struct ScaledPopulations {
  ClusterPopulations populations;
  int clamped = 0;  // clusters whose scaled integral was negative
};

/// p_c = (I_c / g_c) / sum_c' (I_c' / g_c'), negative terms clamped to zero.
ScaledPopulations scale_and_normalize(const Eigen::VectorXd& integrals,
                                      const Eigen::VectorXd& couplings);

struct ErrorBars {
  Eigen::VectorXd stderr_mean;  // NaN when undefined
  bool defined = true;
};

/// Sample standard deviation over shots / sqrt(n), per cluster. Each column
/// of `populations` is one shot.
ErrorBars stderr_per_cluster(const Eigen::MatrixXd& populations);

struct Comparison {
  double total_variation = 0.0;
  Eigen::VectorXd residual_sigma;  // (experimental - predicted) / error bar
  double initial_cluster_excess = 0.0;
};

Comparison compare(const ClusterPopulations& experimental, const Eigen::VectorXd& errors,
                   const ClusterPopulations& predicted);

struct BinResult {
  int bin_index = 0;
  int n_shots = 0;
  ClusterPopulations populations;
  ErrorBars errors;
  int clamped = 0;
  std::vector<int> empty_regions;
};

struct ReductionOptions {
  int n_bins = 10;
  /// Normalize each shot, then average (default); otherwise average the
  /// region integrals of a bin and normalize once.
  bool normalize_per_shot = true;
};

/// Full chain: bin by total signal, integrate regions, rescale by couplings,
/// normalize, attach standard errors.
std::vector<BinResult> reduce(const std::vector<SpectrumShot>& shots,
                              const RegionBoundaries& boundaries,
                              const Eigen::VectorXd& couplings, const ReductionOptions& options);

/// Long-format CSV with header shot_id,freq_ghz,signal[,total_signal]. When
/// total_signal is absent it is the integral of the shot's signal.
std::vector<SpectrumShot> read_long_csv(const std::filesystem::path& path);

/// Manifest lines "path[,total_signal]"; each path is a CSV with columns
/// freq_ghz,signal. Relative paths resolve against the manifest directory.
std::vector<SpectrumShot> read_manifest(const std::filesystem::path& path);

/// Proposes boundaries with period `period_ghz`: the comb offset minimizing
/// the signal sampled at the boundaries, and the window of n_regions periods
/// carrying the most signal. Never applied automatically.
RegionBoundaries suggest_boundaries(const Eigen::VectorXd& freq_ghz, const Eigen::VectorXd& signal,
                                    double period_ghz = 0.53, int n_regions = 13);

}  // namespace stark::expdata
