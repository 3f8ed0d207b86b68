#pragma once

#include "stark/common.hpp"

#include <Eigen/Sparse>

#include <ostream>
#include <type_traits>

namespace stark {

/// Hermitian operator in compressed-row storage. Real symmetric matrices are
/// the Scalar = double case; products with complex vectors stay complex.
template <typename Scalar>
class SparseOperator {
public:
  using Matrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
  using Triplet = Eigen::Triplet<Scalar>;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  SparseOperator() = default;

  /// Sums duplicate (i, j) contributions, drops |value| < drop_tolerance and
  /// verifies Hermiticity. Throws NumericalError if the result is not
  /// Hermitian.
  static SparseOperator from_triplets(Index dim, const std::vector<Triplet>& triplets,
                                      double drop_tolerance = 1e-12);

  /// Takes ownership of an assembled matrix after the same checks.
  explicit SparseOperator(Matrix matrix, double drop_tolerance = 1e-12);

  Index dim() const { return m_.rows(); }
  Index nnz() const { return m_.nonZeros(); }
  const Matrix& matrix() const { return m_; }

  /// y = H x
  void apply(const Eigen::Ref<const StateVector>& x, Eigen::Ref<StateVector> y) const {
    if constexpr (std::is_same_v<Scalar, double>) {
      // Real matrix times complex vector without promoting entries to complex.
      const auto* outer = m_.outerIndexPtr();
      const auto* inner = m_.innerIndexPtr();
      const double* val = m_.valuePtr();
      const double* xr = reinterpret_cast<const double*>(x.data());
      for (Index i = 0; i < m_.rows(); ++i) {
        double re = 0.0, im = 0.0;
        for (auto k = outer[i]; k < outer[i + 1]; ++k) {
          const auto j = 2 * static_cast<Index>(inner[k]);
          re += val[k] * xr[j];
          im += val[k] * xr[j + 1];
        }
        y[i] = Complex(re, im);
      }
    } else {
      y.noalias() = m_ * x;
    }
  }
  StateVector operator*(const StateVector& x) const { return m_ * x; }

  /// <x|H|x> for a normalized x.
  double expectation(const StateVector& x) const { return x.dot(m_ * x).real(); }

  /// Largest |H_ij - conj(H_ji)| over all stored entries.
  double hermiticity_defect() const;

  /// Gershgorin interval containing every eigenvalue.
  std::pair<double, double> gershgorin() const;

  Dense to_dense() const { return Dense(m_); }

  SparseOperator scaled(double factor) const;

  /// Text format: "dim nnz" header, then one "row col re im" line per entry.
  void write_text(std::ostream& out) const;

private:
  Matrix m_;
};

extern template class SparseOperator<double>;
extern template class SparseOperator<Complex>;

}  // namespace stark
