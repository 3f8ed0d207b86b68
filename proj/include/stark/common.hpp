#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <complex>
#include <cstdint>
#include <exception>
#include <initializer_list>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace stark {

using Index = Eigen::Index;
using Complex = std::complex<double>;

/// Complex amplitudes over a product basis.
using StateVector = Eigen::VectorXcd;

/// Fractional population per cluster; entry k belongs to cluster label k - half_width.
using ClusterPopulations = Eigen::VectorXd;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Energies are angular frequencies in rad/us, time is in us, hbar = 1.
constexpr double mhz_to_rad_per_us(double mhz) { return kTwoPi * mhz; }
constexpr double rad_per_us_to_mhz(double w) { return w / kTwoPi; }

inline const char* version() { return "stark 0.3.1"; }

/// Invalid configuration or input data.
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A computation failed or an internal consistency check tripped.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// Deterministic generator for the substream identified by `ids`.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> ids = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (ids.size() + 1));
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto id : ids) push(id);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Runs body(i) for i in [0, n) on up to `workers` threads. The first
/// exception (lowest index) is rethrown after all workers join.
template <class Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
  if (n == 0) return;
  const std::size_t nthreads =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  std::vector<std::exception_ptr> errors(n);
  if (nthreads == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace stark
