#pragma once

#include <vector>

#include "prmo/types.hpp"

namespace prmo {

// One affine constraint Re<P, X> >= b with Hermitian P.
struct SdpConstraint {
  Eigen::MatrixXcd P;
  double b = 0.0;
};

struct SdpOptions {
  int max_sweeps = 4000;        // projection sweeps per feasibility probe
  double feas_tol = 1e-9;       // relative residual accepted as feasible
  double over_relax = 1.6;      // over-relaxation factor for the projections
  int bisection_steps = 48;     // trace-cap bisection iterations
  double bisection_rel_tol = 1e-5;
  int splitting_max_sweeps = 20000;  // direct-splitting cap before the
                                     // bisection fallback takes over
  double splitting_relax = 1.5;      // Douglas-Rachford relaxation in (0, 2)
  double splitting_step = 0.0;       // trace prox step; 0 = auto from data
  double splitting_fp_tol = 1e-8;    // relative fixed-point residual target
};

struct SdpResult {
  Eigen::MatrixXcd X;  // Hermitian PSD solution (empty when infeasible)
  bool feasible = false;
  double trace = 0.0;
  int sweeps_used = 0;
};

// Minimise tr(X) over Hermitian PSD X subject to Re<P_i, X> >= b_i.
// Solved without an external conic solver. Primary path: product-space
// Douglas-Rachford splitting that minimises the trace directly (the trace
// term is absorbed into the PSD-block prox). If that fails to converge,
// fall back to over-relaxed alternating projections deciding feasibility
// plus bisection on an added trace cap.
SdpResult solve_min_trace_sdp(const std::vector<SdpConstraint>& constraints, int dim,
                              const SdpOptions& opt = {});

}  // namespace prmo
