#include "rnmf/hals.hpp"

#include "rnmf/core.hpp"
#include "rnmf/sketch.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace rnmf {

namespace detail {

void check_nonnegative_finite(const Matrix& x) {
  if (!x.allFinite()) {
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < x.cols(); ++j)
        if (!std::isfinite(x(i, j))) {
          throw DataError("input contains non-finite entries at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
        }
  }
  if ((x.array() < 0.0).any()) {
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < x.cols(); ++j)
        if (x(i, j) < 0.0) {
          throw DataError("input contains negative entries at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
        }
  }
}

void validate_solver_options(const Matrix& x, const SolverOptions& opts) {
  check_nonnegative_finite(x);
  const Index bound = std::min(x.rows(), x.cols());
  if (opts.rank < 1 || opts.rank > bound) {
    throw ParameterError("rank " + std::to_string(opts.rank) + " out of range [1, " +
                         std::to_string(bound) + "] for a " + shape_string(x) + " input");
  }
  if (opts.max_iter < 0) throw ParameterError("max_iter must be nonnegative");
  if (!(opts.tol > 0.0)) throw ParameterError("tol must be positive");
  if (opts.reg.alpha_w < 0.0 || opts.reg.alpha_h < 0.0 || opts.reg.beta_w < 0.0 ||
      opts.reg.beta_h < 0.0) {
    throw ParameterError("regularization strengths must be nonnegative");
  }
  if (opts.trace_full_every < 1) throw ParameterError("trace_full_every must be at least 1");
  if (opts.oversampling < 0 || opts.power_iterations < 0) {
    throw ParameterError("oversampling and power iterations must be nonnegative");
  }
}

double projected_sq_norm(const Matrix& grad, const Matrix& at) {
  double sum = 0.0;
  const double* g = grad.data();
  const double* v = at.data();
  const double* end = g + grad.size();
  for (; g != end; ++g, ++v) {
    const double gi = (*v > 0.0) ? *g : std::min(0.0, *g);
    sum += gi * gi;
  }
  return sum;
}

void clamped_col_update(Matrix& w, Index j, const Vector& t_j, const Vector& v_j, double d,
                        double alpha, double beta) {
  const double denom = std::max(d + alpha, kDivisionFloor);
  Vector num = t_j - w * v_j - alpha * w.col(j);
  if (beta != 0.0) num.array() -= beta;
  w.col(j) = (w.col(j) + num / denom).cwiseMax(0.0);
}

void clamped_row_update(Matrix& h, Index j, const Vector& r_j, const Vector& s_j, double d,
                        double alpha, double beta) {
  const double denom = std::max(d + alpha, kDivisionFloor);
  RowVector num = r_j.transpose() - s_j.transpose() * h - alpha * h.row(j);
  if (beta != 0.0) num.array() -= beta;
  h.row(j) = (h.row(j) + num / denom).cwiseMax(0.0);
}

std::vector<Index> sweep_order(Index k, UpdateOrder order, Rng& shuffle_rng) {
  std::vector<Index> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (order == UpdateOrder::Shuffled) {
    for (Index i = k - 1; i > 0; --i) {
      const Index j =
          static_cast<Index>(shuffle_rng.next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
  }
  return idx;
}

void reseed_dead_components(Matrix& w, Matrix& h, Rng& rng) {
  for (Index j = 0; j < w.cols(); ++j) {
    if (w.col(j).maxCoeff() <= 0.0) {
      for (Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform() * 1e-4;
    }
    if (h.row(j).maxCoeff() <= 0.0) {
      for (Index i = 0; i < h.cols(); ++i) h(j, i) = rng.uniform() * 1e-4;
    }
  }
}

}  // namespace detail

namespace {

void check_factor_shapes(const Matrix& x, const Matrix& w, const Matrix& h, const char* who) {
  if (w.rows() != x.rows() || h.cols() != x.cols() || w.cols() != h.rows()) {
    throw ShapeError(std::string(who) + ": inconsistent shapes X=" + shape_string(x) +
                     ", W=" + shape_string(w) + ", H=" + shape_string(h));
  }
}

FactorPair random_init(const Matrix& x, Index rank, Rng& rng) {
  const double scale = std::sqrt(x.mean() / static_cast<double>(rank));
  FactorPair f;
  f.w = uniform_matrix(x.rows(), rank, rng) * scale;
  f.h = uniform_matrix(rank, x.cols(), rng) * scale;
  return f;
}

// NNDSVD split of a randomized rank-k SVD: the leading pair enters with signs
// folded away; later pairs keep whichever of the (positive, positive) or
// (negative, negative) sections carries more mass.
FactorPair nndsvd_init(const Matrix& x, Index rank, Rng& rng) {
  SketchOptions sopts;
  sopts.target_rank = rank;
  sopts.oversampling = std::min<Index>(20, std::min(x.rows(), x.cols()) - rank);
  sopts.power_iterations = 2;
  sopts.test_matrix = TestMatrixKind::Uniform;
  sopts.seed = rng.next_u64();
  const SketchResult s = rqb(x, sopts);

  Eigen::BDCSVD<Matrix> svd(s.b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix u = s.q * svd.matrixU().leftCols(rank);
  const Matrix v = svd.matrixV().leftCols(rank);
  const Vector sv = svd.singularValues().head(rank);

  FactorPair f;
  f.w = Matrix::Zero(x.rows(), rank);
  f.h = Matrix::Zero(rank, x.cols());
  f.w.col(0) = std::sqrt(sv(0)) * u.col(0).cwiseAbs();
  f.h.row(0) = std::sqrt(sv(0)) * v.col(0).cwiseAbs().transpose();
  for (Index j = 1; j < rank; ++j) {
    const Vector up = u.col(j).cwiseMax(0.0);
    const Vector un = (-u.col(j)).cwiseMax(0.0);
    const Vector vp = v.col(j).cwiseMax(0.0);
    const Vector vn = (-v.col(j)).cwiseMax(0.0);
    const double mp = up.norm() * vp.norm();
    const double mn = un.norm() * vn.norm();
    if (std::max(mp, mn) <= 0.0) continue;  // degenerate pair, left for the zero fill
    const Vector& ud = (mp >= mn) ? up : un;
    const Vector& vd = (mp >= mn) ? vp : vn;
    const double mass = std::max(mp, mn);
    const double scale = std::sqrt(sv(j) * mass);
    f.w.col(j) = (scale / ud.norm()) * ud;
    f.h.row(j) = (scale / vd.norm()) * vd.transpose();
  }

  const double fill = x.mean() / 100.0;
  for (double* p = f.w.data(); p != f.w.data() + f.w.size(); ++p)
    if (*p <= 0.0) *p = fill;
  for (double* p = f.h.data(); p != f.h.data() + f.h.size(); ++p)
    if (*p <= 0.0) *p = fill;
  return f;
}

void hals_w_phase(const Matrix& x, Matrix& w, const Matrix& h, const RegConfig& reg) {
  const Matrix xht = x * h.transpose();
  const Matrix hht = h * h.transpose();
  for (Index j = 0; j < w.cols(); ++j) {
    detail::clamped_col_update(w, j, xht.col(j), hht.col(j), hht(j, j), reg.alpha_w, reg.beta_w);
  }
}

// H pass; optionally exports X^T W and W^T W, still valid at sweep end since
// the H updates do not touch W.
void hals_h_phase(const Matrix& x, const Matrix& w, Matrix& h, const RegConfig& reg,
                  Matrix* xtw_out, Matrix* wtw_out) {
  Matrix xtw = x.transpose() * w;
  Matrix wtw = w.transpose() * w;
  for (Index j = 0; j < h.rows(); ++j) {
    detail::clamped_row_update(h, j, xtw.col(j), wtw.col(j), wtw(j, j), reg.alpha_h, reg.beta_h);
  }
  if (xtw_out) *xtw_out = std::move(xtw);
  if (wtw_out) *wtw_out = std::move(wtw);
}

void hals_w_component(const Matrix& x, Matrix& w, const Matrix& h, const RegConfig& reg,
                      Index j) {
  const Vector t_j = x * h.row(j).transpose();
  const Vector v_j = h * h.row(j).transpose();
  detail::clamped_col_update(w, j, t_j, v_j, v_j(j), reg.alpha_w, reg.beta_w);
}

void hals_h_component(const Matrix& x, const Matrix& w, Matrix& h, const RegConfig& reg,
                      Index j) {
  const Vector r_j = x.transpose() * w.col(j);
  const Vector s_j = w.transpose() * w.col(j);
  detail::clamped_row_update(h, j, r_j, s_j, s_j(j), reg.alpha_h, reg.beta_h);
}

struct SweepScratch {
  Matrix xtw;  // n x k
  Matrix wtw;  // k x k
  bool valid = false;
};

SweepScratch run_sweep(const Matrix& x, Matrix& w, Matrix& h, const SolverOptions& opts,
                       Rng& shuffle_rng) {
  SweepScratch s;
  if (opts.order == UpdateOrder::Grouped) {
    hals_w_phase(x, w, h, opts.reg);
    hals_h_phase(x, w, h, opts.reg, &s.xtw, &s.wtw);
    s.valid = true;
  } else {
    for (Index j : detail::sweep_order(opts.rank, opts.order, shuffle_rng)) {
      hals_w_component(x, w, h, opts.reg, j);
      hals_h_component(x, w, h, opts.reg, j);
    }
  }
  return s;
}

}  // namespace

FactorPair init_factors(const Matrix& x, Index rank, InitScheme scheme, Rng& rng) {
  detail::check_nonnegative_finite(x);
  const Index bound = std::min(x.rows(), x.cols());
  if (rank < 1 || rank > bound) {
    throw ParameterError("init_factors: rank " + std::to_string(rank) + " out of range [1, " +
                         std::to_string(bound) + "]");
  }
  return scheme == InitScheme::Random ? random_init(x, rank, rng) : nndsvd_init(x, rank, rng);
}

Matrix update_W(const Matrix& x, const Matrix& w, const Matrix& h, const RegConfig& reg) {
  check_factor_shapes(x, w, h, "update_W");
  Matrix out = w;
  hals_w_phase(x, out, h, reg);
  return out;
}

Matrix update_H(const Matrix& x, const Matrix& w, const Matrix& h, const RegConfig& reg) {
  check_factor_shapes(x, w, h, "update_H");
  Matrix out = h;
  hals_h_phase(x, w, out, reg, nullptr, nullptr);
  return out;
}

double objective(const Matrix& x, const Matrix& w, const Matrix& h) {
  check_factor_shapes(x, w, h, "objective");
  return (x - w * h).squaredNorm();
}

double projected_gradient_norm(const Matrix& x, const Matrix& w, const Matrix& h) {
  check_factor_shapes(x, w, h, "projected_gradient_norm");
  const Matrix resid = x - w * h;
  const Matrix grad_w = -2.0 * (resid * h.transpose());
  const Matrix grad_h = -2.0 * (w.transpose() * resid);
  return detail::projected_sq_norm(grad_w, w) + detail::projected_sq_norm(grad_h, h);
}

FitResult hals_fit(const Matrix& x, const SolverOptions& opts) {
  detail::validate_solver_options(x, opts);
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  Rng init_rng(opts.seed);
  FactorPair f = init_factors(x, opts.rank, opts.init, init_rng);
  Rng shuffle_rng = Rng(opts.seed).split(detail::kShuffleStream);
  Rng reseed_rng = Rng(opts.seed).split(detail::kReseedStream);

  const double x_norm = x.norm();
  FitResult out;
  out.trace.reserve(static_cast<std::size_t>(opts.max_iter) + 1);

  auto record = [&](Index iter, const SweepScratch* scratch) {
    TraceRecord r;
    r.iter = iter;
    const Matrix resid = x - f.w * f.h;
    r.objective = resid.squaredNorm();
    r.rel_err = x_norm > 0.0 ? std::sqrt(r.objective) / x_norm : 0.0;
    const Matrix grad_w = -2.0 * (resid * f.h.transpose());
    const Matrix grad_h = (scratch && scratch->valid)
                              ? Matrix(2.0 * (scratch->wtw * f.h - scratch->xtw.transpose()))
                              : Matrix(-2.0 * (f.w.transpose() * resid));
    r.pgrad = detail::projected_sq_norm(grad_w, f.w) + detail::projected_sq_norm(grad_h, f.h);
    r.pgrad_full = r.pgrad;
    r.objective_compressed = r.objective;
    r.elapsed_s = elapsed();
    out.trace.push_back(r);
  };

  record(0, nullptr);
  const double pgrad0 = out.trace.front().pgrad;
  const bool stationary_start =
      opts.stopping == StoppingRule::ProjectedGradient && !(pgrad0 > 0.0);

  for (Index iter = 1; iter <= opts.max_iter && !stationary_start; ++iter) {
    SweepScratch scratch = run_sweep(x, f.w, f.h, opts, shuffle_rng);
    if (opts.reseed_dead) {
      detail::reseed_dead_components(f.w, f.h, reseed_rng);
      scratch.valid = false;
    }
    record(iter, &scratch);
    const TraceRecord& last = out.trace.back();
    if (opts.stopping == StoppingRule::ProjectedGradient) {
      if (last.pgrad < opts.tol * pgrad0) break;
    } else {
      if (last.objective < opts.tol) break;
    }
  }

  out.factors = std::move(f);
  return out;
}

}  // namespace rnmf
