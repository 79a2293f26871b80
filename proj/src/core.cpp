#include "rnmf/core.hpp"

#include <Eigen/QR>

namespace rnmf {

QrResult economic_qr(const Matrix& a) {
  if (a.rows() < a.cols()) {
    throw ShapeError("economic_qr: need rows >= cols, got " + shape_string(a));
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  QrResult out;
  out.q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  out.r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  return out;
}

namespace {

template <typename Draw>
Matrix filled_matrix(Index rows, Index cols, Draw&& draw) {
  if (rows < 1 || cols < 1) {
    throw ShapeError("random matrix: dimensions must be positive, got " +
                     shape_string(rows, cols));
  }
  Matrix m(rows, cols);
  // Row-major fill so the draw order matches storage order.
  double* p = m.data();
  const double* end = p + rows * cols;
  for (; p != end; ++p) *p = draw();
  return m;
}

}  // namespace

Matrix uniform_matrix(Index rows, Index cols, Rng& rng) {
  return filled_matrix(rows, cols, [&rng] { return rng.uniform(); });
}

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  return filled_matrix(rows, cols, [&rng] { return rng.gaussian(); });
}

}  // namespace rnmf
