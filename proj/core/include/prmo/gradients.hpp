#pragma once

#include "prmo/metrics.hpp"

namespace prmo {

// Derivative of the linear-quadratic penalty in its first argument:
// 0 for x <= 0, x/u on (0, u], 1 beyond (continuous at both knees).
double lq_penalty_derivative(double x, double u);

// Ambient (unprojected) gradient of the smoothed objective
//   g(X) = ||W||_F^2 + rho * sum_i P(h_i(X), u)
// under the convention  d/d eps g(X + eps D)|_0 = Re<grad, D>  in the product
// metric (so the power term contributes exactly 2W). Penalty terms with
// h_i <= 0 contribute nothing and are skipped.
TangentVector euclidean_gradient(const Scenario& sc, const ProductPoint& X,
                                 const PenaltyParams& p);

// Projection of an ambient gradient onto the tangent space at X.
TangentVector riemannian_gradient(const ProductPoint& X, const TangentVector& ambient);

// Gradient of one centre-separation residual d_min - ||ci - cj|| with respect
// to the two centres (before the box-mapping chain): the pair is equal and
// opposite along the connecting line. Throws SingularGeometry if ci == cj.
void distance_pair_gradient(const Eigen::Vector2d& ci, const Eigen::Vector2d& cj,
                            Eigen::Vector2d* gi, Eigen::Vector2d* gj);

// Per-constraint gradient-norm table for diagnostic traces.
struct GradientBreakdownRow {
  std::string name;
  double h = 0.0;       // residual value
  double w_norm = 0.0;  // blockwise norms of rho * P'(h,u) * grad h
  double v_norm = 0.0;
  double phi_norm = 0.0;
  double u_norm = 0.0;
};
std::vector<GradientBreakdownRow> gradient_breakdown(const Scenario& sc,
                                                     const ProductPoint& X,
                                                     const PenaltyParams& p);

// Directional finite-difference probe of euclidean_gradient (fourth-order
// central stencil along random ambient directions, one row per block).
// Intended for the CLI diagnostic; tests keep their own independent oracle.
struct GradientCheckRow {
  std::string block;
  double analytic = 0.0;  // Re<grad_block, direction>
  double numeric = 0.0;   // finite-difference directional derivative
  double rel_err = 0.0;
};
std::vector<GradientCheckRow> check_gradient_fd(const Scenario& sc, const ProductPoint& X,
                                                const PenaltyParams& p, int n_dirs,
                                                double step, uint64_t seed);

}  // namespace prmo
