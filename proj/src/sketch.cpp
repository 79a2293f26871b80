#include "rnmf/sketch.hpp"

#include <algorithm>
#include <iostream>

namespace rnmf {

namespace {

Matrix make_test_matrix(Index rows, Index cols, TestMatrixKind kind, Rng& rng) {
  return kind == TestMatrixKind::Uniform ? uniform_matrix(rows, cols, rng)
                                         : gaussian_matrix(rows, cols, rng);
}

}  // namespace

void check_read_range(const ColumnSource& src, Index first, Index count,
                      const Eigen::Ref<Matrix>& dst) {
  if (first < 0 || count < 1 || first + count > src.cols()) {
    throw ParameterError("read_columns: range [" + std::to_string(first) + ", " +
                         std::to_string(first + count) + ") out of bounds for " +
                         std::to_string(src.cols()) + " columns");
  }
  if (dst.rows() != src.rows() || dst.cols() != count) {
    throw ShapeError("read_columns: destination is " + shape_string(dst.rows(), dst.cols()) +
                     ", expected " + shape_string(src.rows(), count));
  }
}

Index sketch_width(Index rows, Index cols, const SketchOptions& opts) {
  const Index bound = std::min(rows, cols);
  if (opts.target_rank < 1 || opts.target_rank > bound) {
    throw ParameterError("sketch: target rank " + std::to_string(opts.target_rank) +
                         " out of range [1, " + std::to_string(bound) + "] for a " +
                         shape_string(rows, cols) + " matrix");
  }
  if (opts.oversampling < 0 || opts.power_iterations < 0) {
    throw ParameterError("sketch: oversampling and power iterations must be nonnegative");
  }
  if (opts.block_size < 1) {
    throw ParameterError("sketch: block size must be at least 1");
  }
  Index l = opts.target_rank + opts.oversampling;
  if (l > bound) {
    std::cerr << "rnmf: sketch width " << l << " exceeds min(" << rows << ", " << cols
              << "); clamping to " << bound << "\n";
    l = bound;
  }
  return l;
}

SketchResult rqb(const Matrix& a, const SketchOptions& opts) {
  const Index l = sketch_width(a.rows(), a.cols(), opts);
  if (!a.allFinite()) {
    throw DataError("rqb: input contains non-finite values");
  }
  Rng rng(opts.seed);
  const Matrix omega = make_test_matrix(a.cols(), l, opts.test_matrix, rng);

  Matrix y = a * omega;
  for (Index it = 0; it < opts.power_iterations; ++it) {
    const Matrix q = economic_qr(y).q;
    const Matrix z = economic_qr(a.transpose() * q).q;
    y.noalias() = a * z;
  }

  SketchResult out;
  out.q = economic_qr(y).q;
  out.b.noalias() = out.q.transpose() * a;
  return out;
}

SketchResult rqb_streaming(const ColumnSource& src, const SketchOptions& opts) {
  const Index m = src.rows();
  const Index n = src.cols();
  const Index l = sketch_width(m, n, opts);
  const Index bs = std::min(opts.block_size, n);

  Rng rng(opts.seed);
  const Matrix omega = make_test_matrix(n, l, opts.test_matrix, rng);

  Matrix block(m, bs);
  auto each_block = [&](auto&& fn) {
    for (Index c0 = 0; c0 < n; c0 += bs) {
      const Index width = std::min(bs, n - c0);
      auto view = block.leftCols(width);
      src.read_columns(c0, width, view);
      if (!view.allFinite()) {
        throw DataError("rqb_streaming: non-finite values in columns [" + std::to_string(c0) +
                        ", " + std::to_string(c0 + width) + ")");
      }
      fn(c0, width, view);
    }
  };

  Matrix y = Matrix::Zero(m, l);
  each_block([&](Index c0, Index width, const auto& blk) {
    y.noalias() += blk * omega.middleRows(c0, width);
  });

  for (Index it = 0; it < opts.power_iterations; ++it) {
    const Matrix q = economic_qr(y).q;
    y.setZero();
    each_block([&](Index, Index, const auto& blk) {
      y.noalias() += blk * (blk.transpose() * q);
    });
  }

  SketchResult out;
  out.q = economic_qr(y).q;
  out.b.resize(l, n);
  each_block([&](Index c0, Index width, const auto& blk) {
    out.b.middleCols(c0, width).noalias() = out.q.transpose() * blk;
  });
  return out;
}

}  // namespace rnmf
