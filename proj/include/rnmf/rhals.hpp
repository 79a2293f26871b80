#pragma once

#include "rnmf/hals.hpp"
#include "rnmf/sketch.hpp"

namespace rnmf {

/// State of the compressed problem min ||B - W~ H||_F^2 s.t. Q W~ >= 0, H >= 0.
/// W is the nonnegative high-dimensional factor; W~ = Q^T W holds after every
/// completed W-component update.
struct CompressedProblem {
  Matrix q;   // m x l, orthonormal columns
  Matrix b;   // l x n, Q^T X
  Matrix wt;  // l x k, sign-unconstrained W~
  Matrix w;   // m x k, nonnegative
  Matrix h;   // k x n, nonnegative
};

/// Sketch X with a uniform test matrix (width rank + oversampling, subspace
/// iterations per opts), initialize W and H exactly as hals_fit would for the
/// same seed, and set W~ = Q^T W.
CompressedProblem compress(const Matrix& x, const SolverOptions& opts);

/// One full pass of H-row updates in compressed space. Gram products come from
/// W~ and B; the scaling diagonal comes from the high-dimensional W so step
/// sizes match the full-space problem.
void rhals_update_H(CompressedProblem& cp, const RegConfig& reg);

/// One full pass of W-column updates: each W~ column moves along the compressed
/// residual direction, is lifted and clamped (W(:,j) = [Q W~(:,j)]_+, with the
/// l1 offset applied before clamping so sparsity acts on W), then rotated back
/// via W~(:,j) = Q^T W(:,j).
void rhals_update_W(CompressedProblem& cp, const RegConfig& reg);

/// Randomized HALS: compress once, then sweep the compressed updates under
/// opts.order. Stopping follows the projected gradient of the compressed
/// objective; full-space objective, relative error and projected gradient are
/// refreshed every opts.trace_full_every sweeps (carried forward in between)
/// and always recomputed for the final trace record.
FitResult rhals_fit(const Matrix& x, const SolverOptions& opts);

}  // namespace rnmf
