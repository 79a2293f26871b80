#include "rnmf/rhals.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace rnmf {

namespace {

void check_problem_shapes(const CompressedProblem& cp, const char* who) {
  const bool ok = cp.q.rows() == cp.w.rows() && cp.q.cols() == cp.b.rows() &&
                  cp.wt.rows() == cp.q.cols() && cp.wt.cols() == cp.w.cols() &&
                  cp.h.rows() == cp.w.cols() && cp.h.cols() == cp.b.cols();
  if (!ok) {
    throw ShapeError(std::string(who) + ": inconsistent compressed problem, Q=" +
                     shape_string(cp.q) + ", B=" + shape_string(cp.b) + ", W~=" +
                     shape_string(cp.wt) + ", W=" + shape_string(cp.w) + ", H=" +
                     shape_string(cp.h));
  }
}

void rhals_w_component(CompressedProblem& cp, Index j, const Vector& t_j, const Vector& v_j,
                       double d, const RegConfig& reg) {
  const double denom = std::max(d + reg.alpha_w, kDivisionFloor);
  const Vector step = (t_j - cp.wt * v_j - reg.alpha_w * cp.wt.col(j)) / denom;
  cp.wt.col(j) += step;
  Vector lifted = cp.q * cp.wt.col(j);
  if (reg.beta_w != 0.0) lifted.array() -= reg.beta_w / denom;
  cp.w.col(j) = lifted.cwiseMax(0.0);
  cp.wt.col(j).noalias() = cp.q.transpose() * cp.w.col(j);
}

void rhals_w_component_fresh(CompressedProblem& cp, const RegConfig& reg, Index j) {
  const Vector t_j = cp.b * cp.h.row(j).transpose();
  const Vector v_j = cp.h * cp.h.row(j).transpose();
  rhals_w_component(cp, j, t_j, v_j, v_j(j), reg);
}

void rhals_h_component_fresh(CompressedProblem& cp, const RegConfig& reg, Index j) {
  const Vector r_j = cp.b.transpose() * cp.wt.col(j);
  const Vector s_j = cp.wt.transpose() * cp.wt.col(j);
  detail::clamped_row_update(cp.h, j, r_j, s_j, cp.w.col(j).squaredNorm(), reg.alpha_h,
                             reg.beta_h);
}

// H pass; optionally exports B^T W~ and W~^T W~, still valid at sweep end since
// the H updates do not touch W or W~.
void rhals_h_phase(CompressedProblem& cp, const RegConfig& reg, Matrix* r_out, Matrix* st_out) {
  Matrix r = cp.b.transpose() * cp.wt;
  Matrix st = cp.wt.transpose() * cp.wt;
  for (Index j = 0; j < cp.h.rows(); ++j) {
    detail::clamped_row_update(cp.h, j, r.col(j), st.col(j), cp.w.col(j).squaredNorm(),
                               reg.alpha_h, reg.beta_h);
  }
  if (r_out) *r_out = std::move(r);
  if (st_out) *st_out = std::move(st);
}

struct RhalsScratch {
  Matrix r;   // n x k, B^T W~
  Matrix st;  // k x k, W~^T W~
  bool valid = false;
};

RhalsScratch run_rhals_sweep(CompressedProblem& cp, const SolverOptions& opts,
                             Rng& shuffle_rng) {
  RhalsScratch s;
  if (opts.order == UpdateOrder::Grouped) {
    rhals_update_W(cp, opts.reg);
    rhals_h_phase(cp, opts.reg, &s.r, &s.st);
    s.valid = true;
  } else {
    for (Index j : detail::sweep_order(opts.rank, opts.order, shuffle_rng)) {
      rhals_w_component_fresh(cp, opts.reg, j);
      rhals_h_component_fresh(cp, opts.reg, j);
    }
  }
  return s;
}

}  // namespace

CompressedProblem compress(const Matrix& x, const SolverOptions& opts) {
  detail::validate_solver_options(x, opts);

  SketchOptions sopts;
  sopts.target_rank = opts.rank;
  sopts.oversampling = opts.oversampling;
  sopts.power_iterations = opts.power_iterations;
  sopts.test_matrix = TestMatrixKind::Uniform;  // nonnegative draws for nonnegative data
  sopts.seed = Rng(opts.seed).split(detail::kSketchStream).seed();
  SketchResult s = rqb(x, sopts);

  Rng init_rng(opts.seed);
  FactorPair f = init_factors(x, opts.rank, opts.init, init_rng);

  CompressedProblem cp;
  cp.q = std::move(s.q);
  cp.b = std::move(s.b);
  cp.w = std::move(f.w);
  cp.h = std::move(f.h);
  cp.wt.noalias() = cp.q.transpose() * cp.w;
  return cp;
}

void rhals_update_W(CompressedProblem& cp, const RegConfig& reg) {
  check_problem_shapes(cp, "rhals_update_W");
  const Matrix t = cp.b * cp.h.transpose();
  const Matrix v = cp.h * cp.h.transpose();
  for (Index j = 0; j < cp.w.cols(); ++j) {
    rhals_w_component(cp, j, t.col(j), v.col(j), v(j, j), reg);
  }
}

void rhals_update_H(CompressedProblem& cp, const RegConfig& reg) {
  check_problem_shapes(cp, "rhals_update_H");
  rhals_h_phase(cp, reg, nullptr, nullptr);
}

FitResult rhals_fit(const Matrix& x, const SolverOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  CompressedProblem cp = compress(x, opts);  // timing includes the sketch
  Rng shuffle_rng = Rng(opts.seed).split(detail::kShuffleStream);
  Rng reseed_rng = Rng(opts.seed).split(detail::kReseedStream);

  const double x_norm = x.norm();
  FitResult out;
  out.trace.reserve(static_cast<std::size_t>(opts.max_iter) + 1);

  // Carried between cadence points so every trace row has full-space fields.
  double last_objective = 0.0;
  double last_rel_err = 0.0;
  double last_pgrad_full = 0.0;

  auto full_space_metrics = [&] {
    const Matrix resid = x - cp.w * cp.h;
    last_objective = resid.squaredNorm();
    last_rel_err = x_norm > 0.0 ? std::sqrt(last_objective) / x_norm : 0.0;
    const Matrix grad_w = -2.0 * (resid * cp.h.transpose());
    const Matrix grad_h = -2.0 * (cp.w.transpose() * resid);
    last_pgrad_full =
        detail::projected_sq_norm(grad_w, cp.w) + detail::projected_sq_norm(grad_h, cp.h);
  };

  auto compressed_pgrad = [&](const RhalsScratch* scratch, double& objc) {
    const Matrix residc = cp.b - cp.wt * cp.h;
    objc = residc.squaredNorm();
    const Matrix grad_w = -2.0 * (cp.q * (residc * cp.h.transpose()));
    const Matrix grad_h = (scratch && scratch->valid)
                              ? Matrix(2.0 * (scratch->st * cp.h - scratch->r.transpose()))
                              : Matrix(-2.0 * (cp.wt.transpose() * residc));
    return detail::projected_sq_norm(grad_w, cp.w) + detail::projected_sq_norm(grad_h, cp.h);
  };

  auto push_record = [&](Index iter, double objc, double pgradc) {
    TraceRecord r;
    r.iter = iter;
    r.objective = last_objective;
    r.rel_err = last_rel_err;
    r.pgrad = pgradc;
    r.pgrad_full = last_pgrad_full;
    r.objective_compressed = objc;
    r.elapsed_s = elapsed();
    out.trace.push_back(r);
  };

  full_space_metrics();
  double objc0 = 0.0;
  const double pgrad0 = compressed_pgrad(nullptr, objc0);
  push_record(0, objc0, pgrad0);

  const bool stationary_start =
      opts.stopping == StoppingRule::ProjectedGradient && !(pgrad0 > 0.0);

  for (Index iter = 1; iter <= opts.max_iter && !stationary_start; ++iter) {
    RhalsScratch scratch = run_rhals_sweep(cp, opts, shuffle_rng);
    if (opts.reseed_dead) {
      detail::reseed_dead_components(cp.w, cp.h, reseed_rng);
      cp.wt.noalias() = cp.q.transpose() * cp.w;
      scratch.valid = false;
    }

    double objc = 0.0;
    const double pgradc = compressed_pgrad(&scratch, objc);

    bool full = iter % opts.trace_full_every == 0 || iter == opts.max_iter ||
                opts.stopping == StoppingRule::Objective;
    if (full) full_space_metrics();

    bool stop = false;
    if (opts.stopping == StoppingRule::ProjectedGradient) {
      stop = pgradc < opts.tol * pgrad0;
    } else {
      stop = last_objective < opts.tol;
    }
    if (stop && !full) {
      full_space_metrics();
      full = true;
    }

    push_record(iter, objc, pgradc);
    if (stop) break;
  }

  out.factors.w = std::move(cp.w);
  out.factors.h = std::move(cp.h);
  return out;
}

}  // namespace rnmf
