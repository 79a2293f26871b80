#pragma once

#include "rnmf/core.hpp"

namespace rnmf {

enum class TestMatrixKind { Uniform, Gaussian };

struct SketchOptions {
  Index target_rank = 0;
  Index oversampling = 20;
  Index power_iterations = 2;
  // Gaussian is the standalone default; the NMF solvers pass Uniform explicitly.
  TestMatrixKind test_matrix = TestMatrixKind::Gaussian;
  Index block_size = 1024;  // columns per read in the streaming variant
  std::uint64_t seed = 0;
};

struct SketchResult {
  Matrix q;  // m x l, orthonormal columns
  Matrix b;  // l x n, b = q^T a
};

/// Provider of matrix columns by contiguous range. Repeated reads of the same
/// range must return identical data; a source is single-consumer.
class ColumnSource {
 public:
  virtual ~ColumnSource() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  /// Copy columns [first, first + count) into dst, shaped rows() x count.
  virtual void read_columns(Index first, Index count, Eigen::Ref<Matrix> dst) const = 0;
};

/// Validates a read_columns request against the source shape; shared by
/// ColumnSource implementations.
void check_read_range(const ColumnSource& src, Index first, Index count,
                      const Eigen::Ref<Matrix>& dst);

/// ColumnSource view over an in-memory matrix (not owned).
class MatrixColumnSource final : public ColumnSource {
 public:
  explicit MatrixColumnSource(const Matrix& m) : m_(&m) {}
  Index rows() const override { return m_->rows(); }
  Index cols() const override { return m_->cols(); }
  void read_columns(Index first, Index count, Eigen::Ref<Matrix> dst) const override {
    check_read_range(*this, first, count, dst);
    dst = m_->middleCols(first, count);
  }

 private:
  const Matrix* m_;
};

/// Sketch width l = target_rank + oversampling, clamped to min(rows, cols) with
/// a warning on stderr. Throws ParameterError if the options are invalid for the
/// given shape (rank out of range, negative counts).
Index sketch_width(Index rows, Index cols, const SketchOptions& opts);

/// Randomized QB decomposition: a ~= q * b with q orthonormal (m x l) and
/// b = q^T a (l x n). Draws an n x l test matrix, forms y = a * omega, runs
/// power_iterations rounds of subspace iteration (QR of y, QR of a^T q, then
/// y = a * q -- never explicit (a a^T)^q products), and orthonormalizes.
SketchResult rqb(const Matrix& a, const SketchOptions& opts);

/// Column-streamed QB decomposition. Touches the source 2 + power_iterations
/// times: one pass accumulates y = a * omega block by block, each power round
/// accumulates y = a * (a^T q) in a single pass, and a final pass projects
/// b = q^T a. Blocks reduce in ascending index order, so the result is
/// deterministic and independent of block_size up to roundoff.
SketchResult rqb_streaming(const ColumnSource& src, const SketchOptions& opts);

}  // namespace rnmf
