#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rnmf/data_io.hpp"
#include "rnmf/rhals.hpp"

#include <cmath>

using namespace rnmf;

namespace {

// Compressed problem with an identity basis: the compressed updates must then
// coincide with the deterministic ones.
CompressedProblem identity_problem(const Matrix& x, Index rank, std::uint64_t seed) {
  CompressedProblem cp;
  cp.q = Matrix::Identity(x.rows(), x.rows());
  cp.b = x;
  Rng rng(seed);
  const FactorPair f = init_factors(x, rank, InitScheme::Random, rng);
  cp.w = f.w;
  cp.h = f.h;
  cp.wt = cp.w;
  return cp;
}

}  // namespace

TEST_CASE("compress: shape contract, sketch quality, determinism") {
  const Matrix x = synth_lowrank(40, 30, 4, 0.0, 5);
  SolverOptions opts;
  opts.rank = 4;
  opts.oversampling = 10;
  opts.power_iterations = 2;
  opts.seed = 13;
  const CompressedProblem cp = compress(x, opts);
  CHECK(cp.q.rows() == 40);
  CHECK(cp.q.cols() == 14);  // l = k + p
  CHECK(cp.b.rows() == 14);
  CHECK(cp.b.cols() == 30);
  CHECK(cp.wt.rows() == 14);
  CHECK(cp.wt.cols() == 4);
  CHECK((x - cp.q * cp.b).norm() <= 1e-10 * x.norm());  // exact rank-k capture
  CHECK((cp.wt - cp.q.transpose() * cp.w).cwiseAbs().maxCoeff() <= 1e-14);

  const CompressedProblem cp2 = compress(x, opts);
  CHECK((cp.b.array() == cp2.b.array()).all());
  CHECK((cp.w.array() == cp2.w.array()).all());
}

TEST_CASE("compress: initialization matches hals_fit for the same seed") {
  const Matrix x = synth_lowrank(20, 15, 3, 0.0, 7);
  SolverOptions opts;
  opts.rank = 3;
  opts.oversampling = 8;
  opts.seed = 99;
  const CompressedProblem cp = compress(x, opts);
  Rng rng(99);
  const FactorPair init = init_factors(x, 3, InitScheme::Random, rng);
  CHECK((cp.w.array() == init.w.array()).all());
  CHECK((cp.h.array() == init.h.array()).all());
}

TEST_CASE("rhals updates reduce to deterministic ones under an identity basis") {
  const Matrix x = synth_lowrank(6, 5, 2, 0.1, 21);
  for (RegConfig reg : {RegConfig{}, RegConfig{0.5, 0.25, 0.1, 0.05}}) {
    CompressedProblem cp = identity_problem(x, 2, 3);
    const Matrix w_det = update_W(x, cp.w, cp.h, reg);
    rhals_update_W(cp, reg);
    CHECK((cp.w - w_det).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((cp.wt - cp.w).cwiseAbs().maxCoeff() <= 1e-12);

    const Matrix h_det = update_H(x, cp.w, cp.h, reg);
    rhals_update_H(cp, reg);
    CHECK((cp.h - h_det).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(cp.h.minCoeff() >= 0.0);
  }
}

TEST_CASE("rhals updates match the deterministic rule on the sketched matrix") {
  // Rank-1 instance: after one W pass, W lies in range(Q) and the compressed
  // updates coincide with deterministic updates on X' = Q B.
  Rng rng(2);
  const Vector u = uniform_matrix(6, 1, rng).col(0).array() + 0.5;
  const Vector v = uniform_matrix(4, 1, rng).col(0).array() + 0.5;
  const Matrix x = u * v.transpose();
  SolverOptions opts;
  opts.rank = 1;
  opts.oversampling = 2;
  opts.power_iterations = 2;
  opts.seed = 31;
  CompressedProblem cp = compress(x, opts);
  rhals_update_W(cp, {});
  CHECK((cp.w - cp.q * cp.wt).cwiseAbs().maxCoeff() <= 1e-12);

  const Matrix x_sketch = cp.q * cp.b;
  CompressedProblem probe = cp;
  rhals_update_H(probe, {});
  const Matrix h_det = update_H(x_sketch, cp.w, cp.h, {});
  CHECK((probe.h - h_det).cwiseAbs().maxCoeff() <= 1e-10);

  probe = cp;
  probe.h = h_det;
  rhals_update_W(probe, {});
  const Matrix w_det = update_W(x_sketch, cp.w, h_det, {});
  CHECK((probe.w - w_det).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("rhals_update_W keeps W nonnegative and W~ consistent") {
  const Matrix x = synth_lowrank(30, 20, 3, 0.05, 17);
  SolverOptions opts;
  opts.rank = 3;
  opts.oversampling = 8;
  opts.seed = 3;
  CompressedProblem cp = compress(x, opts);
  for (int sweep = 0; sweep < 5; ++sweep) {
    rhals_update_W(cp, {});
    rhals_update_H(cp, {});
    CHECK(cp.w.minCoeff() >= 0.0);
    CHECK(cp.h.minCoeff() >= 0.0);
    CHECK((cp.wt - cp.q.transpose() * cp.w).norm() <=
          1e-12 * std::max(1.0, cp.w.norm()));
  }
}

TEST_CASE("rhals_fit: exact low-rank recovery") {
  const Matrix x = synth_lowrank(200, 100, 5, 0.0, 29);
  SolverOptions opts;
  opts.rank = 5;
  opts.max_iter = 300;
  opts.tol = 1e-24;
  opts.init = InitScheme::Svd;
  opts.oversampling = 10;
  opts.power_iterations = 2;
  opts.seed = 11;
  const FitResult res = rhals_fit(x, opts);
  CHECK(res.trace.back().rel_err <= 1e-6);
  CHECK(res.factors.w.minCoeff() >= 0.0);
  CHECK(res.factors.h.minCoeff() >= 0.0);
  // final record is freshly evaluated in full space
  const double rel = (x - res.factors.w * res.factors.h).norm() / x.norm();
  CHECK(rel == doctest::Approx(res.trace.back().rel_err).epsilon(1e-9));
}

TEST_CASE("rhals_fit: tracks the deterministic solver on a shared init") {
  const Matrix x = synth_lowrank(120, 80, 4, 0.0, 37);
  SolverOptions opts;
  opts.rank = 4;
  opts.max_iter = 200;
  opts.tol = 1e-24;
  opts.init = InitScheme::Svd;
  opts.oversampling = 12;
  opts.seed = 5;
  const FitResult det = hals_fit(x, opts);
  const FitResult rnd = rhals_fit(x, opts);
  CHECK(std::abs(det.trace.back().rel_err - rnd.trace.back().rel_err) <= 1e-3);
}

TEST_CASE("rhals_fit: compressed objective is non-increasing (soft)") {
  const Matrix x = synth_lowrank(50, 35, 4, 0.05, 43);
  SolverOptions opts;
  opts.rank = 4;
  opts.max_iter = 60;
  opts.tol = 1e-300;
  opts.oversampling = 10;
  opts.seed = 7;
  const FitResult res = rhals_fit(x, opts);
  const double slack = 1e-8 * res.trace.front().objective_compressed;
  for (std::size_t t = 1; t < res.trace.size(); ++t) {
    CHECK(res.trace[t].objective_compressed <=
          res.trace[t - 1].objective_compressed + slack);
  }
}

TEST_CASE("rhals_fit: trace bookkeeping") {
  // the noise floor keeps consecutive full-space evaluations distinct
  const Matrix x = synth_lowrank(60, 45, 3, 0.05, 51);
  SolverOptions opts;
  opts.rank = 3;
  opts.max_iter = 25;
  opts.tol = 1e-300;
  opts.oversampling = 8;
  opts.trace_full_every = 10;
  opts.seed = 2;
  const FitResult res = rhals_fit(x, opts);
  CHECK(res.trace.size() == 26);
  for (std::size_t t = 1; t < res.trace.size(); ++t) {
    CHECK(res.trace[t].iter == res.trace[t - 1].iter + 1);
    CHECK(res.trace[t].elapsed_s >= res.trace[t - 1].elapsed_s);
  }
  // full-space metrics refresh on the cadence and at the end
  CHECK(res.trace[10].rel_err != res.trace[9].rel_err);
  CHECK(res.trace[11].rel_err == res.trace[10].rel_err);  // carried forward
  CHECK(res.trace[25].rel_err != res.trace[24].rel_err);
}

TEST_CASE("rhals_fit: max_iter 0 returns the initialization") {
  const Matrix x = synth_lowrank(14, 10, 2, 0.0, 3);
  SolverOptions opts;
  opts.rank = 2;
  opts.max_iter = 0;
  opts.oversampling = 6;
  opts.seed = 55;
  const FitResult res = rhals_fit(x, opts);
  CHECK(res.trace.size() == 1);
  Rng rng(55);
  const FactorPair init = init_factors(x, 2, InitScheme::Random, rng);
  CHECK((res.factors.w.array() == init.w.array()).all());
  CHECK((res.factors.h.array() == init.h.array()).all());
}

TEST_CASE("rhals_fit: alternative orders still descend and stay nonnegative") {
  const Matrix x = synth_lowrank(40, 28, 3, 0.05, 61);
  for (UpdateOrder order : {UpdateOrder::Interleaved, UpdateOrder::Shuffled}) {
    SolverOptions opts;
    opts.rank = 3;
    opts.max_iter = 30;
    opts.tol = 1e-300;
    opts.order = order;
    opts.oversampling = 8;
    opts.seed = 4;
    const FitResult res = rhals_fit(x, opts);
    CHECK(res.factors.w.minCoeff() >= 0.0);
    CHECK(res.factors.h.minCoeff() >= 0.0);
    CHECK(res.trace.back().objective_compressed <
          res.trace.front().objective_compressed);
  }
}

TEST_CASE("rhals_fit: l1 regularization sparsifies W") {
  const Matrix x = synth_lowrank(40, 30, 4, 0.1, 71);
  SolverOptions opts;
  opts.rank = 4;
  opts.max_iter = 60;
  opts.tol = 1e-300;
  opts.oversampling = 10;
  opts.seed = 6;
  const FitResult plain = rhals_fit(x, opts);
  opts.reg.beta_w = 0.9;
  const FitResult lasso = rhals_fit(x, opts);
  auto zeros = [](const Matrix& m) {
    Index c = 0;
    for (const double* p = m.data(); p != m.data() + m.size(); ++p)
      if (*p == 0.0) ++c;
    return c;
  };
  CHECK(zeros(lasso.factors.w) >= zeros(plain.factors.w));
  CHECK(lasso.factors.w.minCoeff() >= 0.0);
}
