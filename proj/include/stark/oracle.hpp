#pragma once

#include "stark/basis.hpp"
#include "stark/sparse_operator.hpp"
#include "stark/typicality.hpp"

namespace stark {

/// Full Hermitian eigendecomposition, eigenvalues ascending.
template <typename Scalar>
struct EigenDecomposition {
  Eigen::VectorXd values;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;  // columns
};

/// Dense exact diagonalization. Throws InputError above `max_dim`.
template <typename Scalar>
EigenDecomposition<Scalar> exact_diagonalize(const SparseOperator<Scalar>& H,
                                             Index max_dim = 6000);

/// Number of eigenvalues in the closed interval [lower, upper].
template <typename Scalar>
Index count_in_interval(const EigenDecomposition<Scalar>& eig, double lower, double upper);

/// (1/N_S) sum over eigenvalues in the closed shell of <phi_n|A_c|phi_n> for
/// every cluster c. Throws InputError for an empty shell.
template <typename Scalar>
ClusterPopulations microcanonical_average(const EigenDecomposition<Scalar>& eig,
                                          const EnergyShell& shell, const ProductBasis& basis);

/// sum_n exp(-i E_n t) <phi_n|psi0> |phi_n>
template <typename Scalar>
StateVector exact_evolve(const EigenDecomposition<Scalar>& eig, const StateVector& psi0, double t);

/// Normalized sum_n exp(-(E_n - E0)^2 / 4 Delta E^2) <phi_n|psi> |phi_n>.
template <typename Scalar>
StateVector exact_filter(const EigenDecomposition<Scalar>& eig, const StateVector& psi,
                         const EnergyShell& shell);

/// |<a|b>|^2 for normalized vectors.
inline double fidelity(const StateVector& a, const StateVector& b) {
  return std::norm(a.dot(b)) / (a.squaredNorm() * b.squaredNorm());
}

}  // namespace stark
