#include "stark/sparse_operator.hpp"

#include <cmath>
#include <cstdio>

namespace stark {

namespace {

template <typename Scalar>
void prune_and_check(Eigen::SparseMatrix<Scalar, Eigen::RowMajor>& m, double drop_tolerance) {
  if (m.rows() != m.cols()) throw NumericalError("operator must be square");
  m.prune([drop_tolerance](Index, Index, const Scalar& v) { return std::abs(v) >= drop_tolerance; });
  m.makeCompressed();
}

}  // namespace

template <typename Scalar>
SparseOperator<Scalar> SparseOperator<Scalar>::from_triplets(Index dim,
                                                             const std::vector<Triplet>& triplets,
                                                             double drop_tolerance) {
  Matrix m(dim, dim);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return SparseOperator(std::move(m), drop_tolerance);
}

template <typename Scalar>
SparseOperator<Scalar>::SparseOperator(Matrix matrix, double drop_tolerance) : m_(std::move(matrix)) {
  prune_and_check(m_, drop_tolerance);
  const double defect = hermiticity_defect();
  double scale = 0.0;
  for (Index k = 0; k < m_.nonZeros(); ++k) scale = std::max(scale, std::abs(m_.valuePtr()[k]));
  if (defect > 1e-12 * std::max(scale, 1.0)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "operator is not Hermitian (defect %.3e, scale %.3e)", defect,
                  scale);
    throw NumericalError(buf);
  }
}

template <typename Scalar>
double SparseOperator<Scalar>::hermiticity_defect() const {
  const Matrix adj = m_.adjoint();
  const Matrix diff = m_ - adj;
  double worst = 0.0;
  for (Index k = 0; k < diff.nonZeros(); ++k) worst = std::max(worst, std::abs(diff.valuePtr()[k]));
  return worst;
}

template <typename Scalar>
std::pair<double, double> SparseOperator<Scalar>::gershgorin() const {
  if (dim() == 0) return {0.0, 0.0};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Index i = 0; i < m_.outerSize(); ++i) {
    double center = 0.0;
    double radius = 0.0;
    for (typename Matrix::InnerIterator it(m_, i); it; ++it) {
      if (it.col() == i)
        center = std::real(it.value());
      else
        radius += std::abs(it.value());
    }
    lo = std::min(lo, center - radius);
    hi = std::max(hi, center + radius);
  }
  return {lo, hi};
}

template <typename Scalar>
SparseOperator<Scalar> SparseOperator<Scalar>::scaled(double factor) const {
  SparseOperator out;
  out.m_ = m_ * Scalar(factor);
  return out;
}

template <typename Scalar>
void SparseOperator<Scalar>::write_text(std::ostream& out) const {
  out << dim() << ' ' << nnz() << '\n';
  char buf[128];
  for (Index i = 0; i < m_.outerSize(); ++i) {
    for (typename Matrix::InnerIterator it(m_, i); it; ++it) {
      const Complex v(it.value());
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g %.17g\n", static_cast<long long>(i),
                    static_cast<long long>(it.col()), v.real(), v.imag());
      out << buf;
    }
  }
}

template class SparseOperator<double>;
template class SparseOperator<Complex>;

}  // namespace stark
