#pragma once

#include "rnmf/types.hpp"

#include <vector>

namespace rnmf {

enum class InitScheme { Random, Svd };
enum class UpdateOrder { Interleaved, Grouped, Shuffled };
enum class StoppingRule { ProjectedGradient, Objective };

/// l2 (alpha) and l1 (beta) strengths per factor; all zero means plain HALS,
/// both nonzero on one factor gives the elastic net.
struct RegConfig {
  double alpha_w = 0.0;
  double alpha_h = 0.0;
  double beta_w = 0.0;
  double beta_h = 0.0;
};

struct SolverOptions {
  Index rank = 0;
  Index max_iter = 200;
  double tol = 1e-4;
  InitScheme init = InitScheme::Random;
  UpdateOrder order = UpdateOrder::Grouped;
  StoppingRule stopping = StoppingRule::ProjectedGradient;
  RegConfig reg;
  std::uint64_t seed = 0;
  // Reinitialize factor columns/rows that collapse to exact zero (off: they stay dead).
  bool reseed_dead = false;
  // Randomized solver only: sweeps between full-space objective evaluations.
  Index trace_full_every = 10;
  // Randomized solver only: compression sketch parameters.
  Index oversampling = 20;
  Index power_iterations = 2;
};

struct FactorPair {
  Matrix w;  // m x k, nonnegative
  Matrix h;  // k x n, nonnegative
};

struct TraceRecord {
  Index iter = 0;
  double elapsed_s = 0.0;
  double objective = 0.0;  // ||X - W H||_F^2
  double rel_err = 0.0;    // ||X - W H||_F / ||X||_F
  // Squared projected-gradient norm driving the stopping rule (compressed-space
  // for the randomized solver, full-space for the deterministic one).
  double pgrad = 0.0;
  double pgrad_full = 0.0;
  // ||B - W~ H||_F^2 for the randomized solver; equals `objective` otherwise.
  double objective_compressed = 0.0;
};

using ConvergenceTrace = std::vector<TraceRecord>;

struct FitResult {
  FactorPair factors;
  ConvergenceTrace trace;
};

// Floor applied to update denominators so a dead component divides by this
// instead of zero.
inline constexpr double kDivisionFloor = 1e-12;

/// Nonnegative starting factors. Random: uniform [0,1) entries scaled by
/// sqrt(mean(X)/k). Svd: NNDSVD-style split of a randomized rank-k SVD (the
/// dominant nonnegative part of each singular pair), with zero entries lifted
/// to mean(X)/100. Both schemes advance the rng.
FactorPair init_factors(const Matrix& x, Index rank, InitScheme scheme, Rng& rng);

/// One full pass of per-column W updates with H fixed, via the residual-free
/// rules: for each j,
///   W(:,j) <- [ W(:,j) + (XH^T(:,j) - beta_w - W (HH^T)(:,j) - alpha_w W(:,j))
///               / max((HH^T)(j,j) + alpha_w, floor) ]_+
/// using XH^T and HH^T precomputed once. Returns the updated W.
Matrix update_W(const Matrix& x, const Matrix& w, const Matrix& h, const RegConfig& reg);

/// Mirror of update_W for the rows of H, with X^T W and W^T W.
Matrix update_H(const Matrix& x, const Matrix& w, const Matrix& h, const RegConfig& reg);

/// ||X - W H||_F^2.
double objective(const Matrix& x, const Matrix& w, const Matrix& h);

/// Squared Frobenius norm of the projected gradient over both factors:
/// entries at zero contribute min(0, partial), positive entries the full
/// partial, with grad_W = 2(W HH^T - X H^T) and grad_H = 2(W^T W H - W^T X).
/// Zero exactly at KKT points of the nonnegativity-constrained problem.
double projected_gradient_norm(const Matrix& x, const Matrix& w, const Matrix& h);

/// Deterministic HALS. Sweeps alternate full W and H passes (or per-component
/// interleaved/shuffled visits per opts.order) until the stopping rule fires
/// or max_iter sweeps complete; one trace record per sweep plus the initial
/// state. Projected-gradient stopping compares against the initial point:
/// pgrad < tol * pgrad0.
FitResult hals_fit(const Matrix& x, const SolverOptions& opts);

namespace detail {

// Sub-stream tags hung off SolverOptions::seed. Initialization uses the seed
// directly so init_factors(x, k, scheme, Rng(seed)) reproduces a fit's start.
inline constexpr std::uint64_t kShuffleStream = 1;
inline constexpr std::uint64_t kReseedStream = 2;
inline constexpr std::uint64_t kSketchStream = 3;

void check_nonnegative_finite(const Matrix& x);
void validate_solver_options(const Matrix& x, const SolverOptions& opts);
double projected_sq_norm(const Matrix& grad, const Matrix& at);

// In-place component updates shared by the deterministic and randomized solvers.
// t_j / v_j are the relevant Gram columns, d the scaling diagonal entry.
void clamped_col_update(Matrix& w, Index j, const Vector& t_j, const Vector& v_j, double d,
                        double alpha, double beta);
void clamped_row_update(Matrix& h, Index j, const Vector& r_j, const Vector& s_j, double d,
                        double alpha, double beta);

// Visit order for one sweep: component indices 0..k-1, permuted when shuffled.
std::vector<Index> sweep_order(Index k, UpdateOrder order, Rng& shuffle_rng);

void reseed_dead_components(Matrix& w, Matrix& h, Rng& rng);

}  // namespace detail

}  // namespace rnmf
