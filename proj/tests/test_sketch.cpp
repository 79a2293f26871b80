#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rnmf/data_io.hpp"
#include "rnmf/sketch.hpp"

#include <Eigen/SVD>

#include <cmath>

using namespace rnmf;

namespace {

// Spectral norm via full SVD; test-side oracle only.
double spectral_norm(const Matrix& a) {
  return Eigen::BDCSVD<Matrix>(a).singularValues()(0);
}

// 100 x 80 matrix with singular values 2^-1, 2^-2, ...
Matrix decay_matrix(std::uint64_t seed) {
  Rng rng(seed);
  const Matrix u = economic_qr(gaussian_matrix(100, 80, rng)).q;
  const Matrix v = economic_qr(gaussian_matrix(80, 80, rng)).q;
  Vector s(80);
  for (Index i = 0; i < 80; ++i) s(i) = std::pow(2.0, -static_cast<double>(i + 1));
  return u * s.asDiagonal() * v.transpose();
}

struct CountingSource final : ColumnSource {
  explicit CountingSource(const Matrix& m) : inner(m) {}
  Index rows() const override { return inner.rows(); }
  Index cols() const override { return inner.cols(); }
  void read_columns(Index first, Index count, Eigen::Ref<Matrix> dst) const override {
    columns_read += count;
    inner.read_columns(first, count, dst);
  }
  MatrixColumnSource inner;
  mutable Index columns_read = 0;
};

}  // namespace

TEST_CASE("rqb: exact rank-1 capture") {
  Rng rng(2);
  const Vector u = uniform_matrix(8, 1, rng).col(0).array() + 0.5;
  const Vector v = uniform_matrix(5, 1, rng).col(0).array() + 0.5;
  const Matrix a = u * v.transpose();

  SketchOptions opts;
  opts.target_rank = 1;
  opts.oversampling = 2;
  opts.power_iterations = 0;
  opts.seed = 1;
  const SketchResult s = rqb(a, opts);
  CHECK(s.q.rows() == 8);
  CHECK(s.q.cols() == 3);
  CHECK(s.b.rows() == 3);
  CHECK(s.b.cols() == 5);
  CHECK((a - s.q * s.b).norm() <= 1e-12 * a.norm());
  CHECK((s.q.transpose() * s.q - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("rqb: decaying spectrum error against SVD oracle") {
  const Matrix a = decay_matrix(31);
  const double sigma11 = Eigen::BDCSVD<Matrix>(a).singularValues()(10);
  CHECK(sigma11 == doctest::Approx(std::pow(2.0, -11.0)).epsilon(1e-10));

  SketchOptions opts;
  opts.target_rank = 10;
  opts.oversampling = 10;
  opts.power_iterations = 2;
  opts.seed = 77;
  const SketchResult s = rqb(a, opts);
  CHECK(spectral_norm(a - s.q * s.b) <= 10.0 * sigma11);
}

TEST_CASE("rqb: power iterations tighten the error") {
  const Matrix a = decay_matrix(19);
  SketchOptions opts;
  opts.target_rank = 10;
  opts.oversampling = 10;
  opts.seed = 5;
  opts.power_iterations = 0;
  const SketchResult s0 = rqb(a, opts);
  const double err0 = spectral_norm(a - s0.q * s0.b);
  opts.power_iterations = 2;
  const SketchResult s2 = rqb(a, opts);
  const double err2 = spectral_norm(a - s2.q * s2.b);
  CHECK(err2 <= err0);
}

TEST_CASE("rqb: projection idempotence") {
  const Matrix a = synth_lowrank(40, 30, 6, 0.05, 9);
  SketchOptions opts;
  opts.target_rank = 6;
  opts.oversampling = 5;
  opts.seed = 3;
  const SketchResult s = rqb(a, opts);
  const Matrix qb = s.q * s.b;
  CHECK((s.q * (s.q.transpose() * qb) - qb).norm() <= 1e-12 * qb.norm());
}

TEST_CASE("rqb: oversampling clamps to min(m, n)") {
  const Matrix a = synth_lowrank(10, 8, 2, 0.0, 4);
  SketchOptions opts;
  opts.target_rank = 2;
  opts.oversampling = 20;  // 22 > 8, clamps to 8 with a warning
  opts.seed = 1;
  const SketchResult s = rqb(a, opts);
  CHECK(s.q.cols() == 8);
  CHECK(s.b.rows() == 8);
}

TEST_CASE("rqb: parameter and data errors") {
  const Matrix a = synth_lowrank(10, 8, 2, 0.0, 4);
  SketchOptions opts;
  opts.target_rank = 0;
  CHECK_THROWS_AS(rqb(a, opts), ParameterError);
  opts.target_rank = 9;  // > min(10, 8)
  CHECK_THROWS_AS(rqb(a, opts), ParameterError);
  opts.target_rank = 2;
  opts.block_size = 0;
  CHECK_THROWS_AS(rqb(a, opts), ParameterError);
  opts.block_size = 1024;
  Matrix bad = a;
  bad(3, 4) = std::nan("");
  CHECK_THROWS_AS(rqb(bad, opts), DataError);
}

TEST_CASE("rqb: deterministic in the seed") {
  const Matrix a = synth_lowrank(30, 25, 4, 0.0, 8);
  SketchOptions opts;
  opts.target_rank = 4;
  opts.oversampling = 6;
  opts.seed = 123;
  const SketchResult s1 = rqb(a, opts);
  const SketchResult s2 = rqb(a, opts);
  CHECK((s1.q.array() == s2.q.array()).all());
  CHECK((s1.b.array() == s2.b.array()).all());
}

TEST_CASE("rqb_streaming: block-size independence and rqb agreement") {
  Matrix a = synth_lowrank(300, 200, 5, 0.0, 5);
  a /= a.norm();
  SketchOptions opts;
  opts.target_rank = 5;
  opts.oversampling = 10;
  opts.power_iterations = 2;
  opts.seed = 21;

  const SketchResult mem = rqb(a, opts);
  const Matrix qb_mem = mem.q * mem.b;

  const MatrixColumnSource src(a);
  Matrix qb_prev;
  for (Index bs : {Index(1), Index(7), Index(64), Index(1024)}) {
    SketchOptions o = opts;
    o.block_size = bs;
    const SketchResult st = rqb_streaming(src, o);
    const Matrix qb = st.q * st.b;
    CHECK((qb - qb_mem).norm() <= 1e-10);
    if (qb_prev.size() > 0) CHECK((qb - qb_prev).norm() <= 1e-10);
    qb_prev = qb;
  }
}

TEST_CASE("rqb_streaming: pass count is 2 + q") {
  const Matrix a = synth_lowrank(60, 40, 3, 0.0, 2);
  for (Index q : {Index(0), Index(1), Index(3)}) {
    CountingSource src(a);
    SketchOptions opts;
    opts.target_rank = 3;
    opts.oversampling = 4;
    opts.power_iterations = q;
    opts.block_size = 16;
    opts.seed = 6;
    rqb_streaming(src, opts);
    CHECK(src.columns_read == (2 + q) * a.cols());
  }
}

TEST_CASE("column source: repeated reads are identical") {
  const Matrix a = synth_lowrank(12, 9, 3, 0.1, 3);
  const MatrixColumnSource src(a);
  Matrix b1(12, 4);
  Matrix b2(12, 4);
  src.read_columns(2, 4, b1);
  src.read_columns(2, 4, b2);
  CHECK((b1.array() == b2.array()).all());
  CHECK((b1 - a.middleCols(2, 4)).cwiseAbs().maxCoeff() == 0.0);
}
