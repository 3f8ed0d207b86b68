#include "stark/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <string>

namespace stark {

template <typename Scalar>
EigenDecomposition<Scalar> exact_diagonalize(const SparseOperator<Scalar>& H, Index max_dim) {
  if (H.dim() > max_dim)
    throw InputError("dimension " + std::to_string(H.dim()) + " exceeds the exact-diagonalization cap " +
                     std::to_string(max_dim));
  Eigen::SelfAdjointEigenSolver<typename SparseOperator<Scalar>::Dense> solver(H.to_dense());
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

template <typename Scalar>
Index count_in_interval(const EigenDecomposition<Scalar>& eig, double lower, double upper) {
  return (eig.values.array() >= lower && eig.values.array() <= upper).count();
}

template <typename Scalar>
ClusterPopulations microcanonical_average(const EigenDecomposition<Scalar>& eig,
                                          const EnergyShell& shell, const ProductBasis& basis) {
  if (eig.vectors.rows() != basis.dim()) throw InputError("basis and eigenvectors disagree");
  const Eigen::MatrixXd F = basis.population_matrix();
  ClusterPopulations sum = ClusterPopulations::Zero(basis.n_clusters());
  Index n = 0;
  for (Index k = 0; k < eig.values.size(); ++k) {
    const double e = eig.values[k];
    if (e < shell.lower() || e > shell.upper()) continue;
    sum += F.transpose() * eig.vectors.col(k).cwiseAbs2();
    ++n;
  }
  if (n == 0) throw InputError("no eigenvalue inside the energy shell");
  return sum / static_cast<double>(n);
}

template <typename Scalar>
StateVector exact_evolve(const EigenDecomposition<Scalar>& eig, const StateVector& psi0, double t) {
  if (psi0.size() != eig.vectors.rows()) throw InputError("state and eigenvectors disagree");
  const Eigen::MatrixXcd V = eig.vectors.template cast<Complex>();
  StateVector c = V.adjoint() * psi0;
  for (Index k = 0; k < c.size(); ++k) c[k] *= std::polar(1.0, -eig.values[k] * t);
  return V * c;
}

template <typename Scalar>
StateVector exact_filter(const EigenDecomposition<Scalar>& eig, const StateVector& psi,
                         const EnergyShell& shell) {
  if (psi.size() != eig.vectors.rows()) throw InputError("state and eigenvectors disagree");
  const Eigen::MatrixXcd V = eig.vectors.template cast<Complex>();
  StateVector c = V.adjoint() * psi;
  const double w = 4.0 * shell.half_width * shell.half_width;
  for (Index k = 0; k < c.size(); ++k) {
    const double d = eig.values[k] - shell.center;
    c[k] *= std::exp(-d * d / w);
  }
  StateVector out = V * c;
  return out / out.norm();
}

#define STARK_ORACLE_INSTANTIATE(S)                                                           \
  template EigenDecomposition<S> exact_diagonalize(const SparseOperator<S>&, Index);          \
  template Index count_in_interval(const EigenDecomposition<S>&, double, double);            \
  template ClusterPopulations microcanonical_average(const EigenDecomposition<S>&,            \
                                                     const EnergyShell&, const ProductBasis&); \
  template StateVector exact_evolve(const EigenDecomposition<S>&, const StateVector&, double); \
  template StateVector exact_filter(const EigenDecomposition<S>&, const StateVector&,         \
                                    const EnergyShell&);

STARK_ORACLE_INSTANTIATE(double)
STARK_ORACLE_INSTANTIATE(Complex)

#undef STARK_ORACLE_INSTANTIATE

}  // namespace stark
