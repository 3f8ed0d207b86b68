#pragma once

#include "stark/basis.hpp"
#include "stark/hamiltonian.hpp"

#include <ostream>

namespace stark {

/// Classic fourth-order Runge-Kutta step for y' = f(y), with caller-owned
/// stage buffers so the time loop does not allocate.
class Rk4Stepper {
public:
  explicit Rk4Stepper(Index n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

  /// f(in, out) must write out = f(in).
  template <class Rhs>
  void step(Rhs&& f, StateVector& y, double h) {
    f(y, k1_);
    tmp_ = y + (0.5 * h) * k1_;
    f(tmp_, k2_);
    tmp_ = y + (0.5 * h) * k2_;
    f(tmp_, k3_);
    tmp_ = y + h * k3_;
    f(tmp_, k4_);
    y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

private:
  StateVector k1_, k2_, k3_, k4_, tmp_;
};

/// Largest stable step for RK4 on the imaginary axis is ~2.83 / rho.
constexpr double kRk4StabilityLimit = 2.8;

struct TimeStepPolicy {
  /// Upper bound dt <= stability_fraction / rho.
  double stability_fraction = 0.1;
  /// When > 0, also bound the RK4 phase error accumulated by an eigencomponent
  /// at the spectral edge over the whole run: rho t (rho dt)^4 / 120 <= tol.
  double phase_tolerance = 1e-4;
  /// When > 0, also bound the RK4 norm loss of that component over the run:
  /// rho t (rho dt)^5 / 72 <= tol.
  double norm_tolerance = 2e-7;
};

/// Step size for a propagation of length |t_total| under spectral radius rho.
double choose_time_step(double spectral_radius, double t_total, const TimeStepPolicy& policy = {});

/// Propagates psi by exp(-i H t) with fixed RK4 steps of size close to |dt|
/// (the step count is rounded up so the run ends exactly at t). Signed t
/// runs backwards in time.
template <typename Scalar>
void rk4_propagate(const SparseOperator<Scalar>& H, StateVector& psi, double t, double dt);

struct PopulationTrace {
  std::vector<double> times;                    // us
  std::vector<ClusterPopulations> populations;  // one per time
  std::vector<double> norm_drift;               // 1 - |psi|^2
  std::vector<double> energy_drift;             // (<H>(t) - <H>(0)) / rho
};

struct EvolveOptions {
  double t_total = 3.0;  // us
  double dt = 0.0;       // us; 0 selects choose_time_step
  TimeStepPolicy policy;
  /// Record every `sample_every` steps; 0 derives it from sample_interval.
  int sample_every = 0;
  double sample_interval = 0.01;  // us
  double max_norm_drift = 1e-6;
  /// Spectral radius; 0 means compute it with spectral_bounds.
  double spectral_radius = 0.0;
};

struct EvolveResult {
  PopulationTrace trace;
  StateVector final_state;
  double dt = 0.0;
  std::int64_t steps = 0;
  double spectral_radius = 0.0;
};

/// Real-time propagation of psi0 under H with populations sampled along the
/// way. No renormalization; throws NumericalError when |1 - |psi|^2| exceeds
/// max_norm_drift at a sample, and InputError when dt breaks the stability
/// bound.
template <typename Scalar>
EvolveResult evolve(const SparseOperator<Scalar>& H, const ProductBasis& basis,
                    const StateVector& psi0, const EvolveOptions& options = {});

struct Equilibrium {
  bool equilibrated = false;
  double t_eq = 0.0;  // us
  ClusterPopulations p_eq;
  int windows = 0;
};

/// Splits the trace into consecutive windows of `window` us and returns the
/// end of the earliest window after which successive window averages of
/// every population differ by less than `tol`. p_eq averages the final
/// `window` us of the trace.
Equilibrium detect_equilibrium(const PopulationTrace& trace, double window = 0.5,
                               double tol = 0.005);

/// Columns t_us, p_<label>..., norm_drift with labels m6..p6 style.
void write_trace_csv(const PopulationTrace& trace, std::ostream& out);

/// Column label for cluster slot k of n_clusters ("m6", "0", "p3", ...).
std::string cluster_label(int slot, int n_clusters);

}  // namespace stark
