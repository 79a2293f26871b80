#pragma once

#include "rnmf/types.hpp"

namespace rnmf {

struct QrResult {
  Matrix q;  // rows x cols, orthonormal columns
  Matrix r;  // cols x cols, upper triangular
};

/// Checked product; throws ShapeError naming both shapes on an inner-dimension
/// mismatch. Works on any Eigen expression.
template <typename DerivedA, typename DerivedB>
Matrix matmul(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree for " + shape_string(a) + " * " +
                     shape_string(b));
  }
  return a * b;
}

template <typename Derived>
double frobenius_norm(const Eigen::MatrixBase<Derived>& a) {
  return a.norm();
}

/// Thin QR via Householder reflections. Requires rows >= cols; Q has orthonormal
/// columns and Q * R reconstructs the input to machine precision.
QrResult economic_qr(const Matrix& a);

/// rows x cols matrix with i.i.d. uniform [0,1) entries, filled row by row.
Matrix uniform_matrix(Index rows, Index cols, Rng& rng);

/// rows x cols matrix with i.i.d. standard normal entries, filled row by row.
Matrix gaussian_matrix(Index rows, Index cols, Rng& rng);

}  // namespace rnmf
