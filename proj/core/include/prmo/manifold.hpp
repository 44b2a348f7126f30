#pragma once

#include <random>

#include "prmo/types.hpp"

namespace prmo {

// A point of the product search space:
//   W      M x (K_c + M) complex, unconstrained (Euclidean factor)
//   V      M*(M+K_c) x K_t complex, unit-norm columns (oblique factor)
//   phi    length-N complex, unit modulus entries (circle factor)
//   u_raw  length 2*N_ctrl real, unconstrained pre-sigmoid centre coordinates
struct ProductPoint {
  Eigen::MatrixXcd W;
  Eigen::MatrixXcd V;
  Eigen::VectorXcd phi;
  Eigen::VectorXd u_raw;
};

// Block vector with the same layout as ProductPoint. Used both for ambient
// (unprojected) gradients and for tangent vectors.
struct TangentVector {
  Eigen::MatrixXcd W;
  Eigen::MatrixXcd V;
  Eigen::VectorXcd phi;
  Eigen::VectorXd u_raw;
};

TangentVector zero_like(const ProductPoint& X);

// Product metric  <a,b> = Re tr(a_W^H b_W) + Re tr(a_V^H b_V)
//                        + Re(a_phi^H b_phi) + a_u^T b_u.
double inner(const TangentVector& a, const TangentVector& b);
double norm(const TangentVector& a);

// r = a + s*b, blockwise.
TangentVector add_scaled(const TangentVector& a, double s, const TangentVector& b);
void scale_in_place(TangentVector& a, double s);

// Orthogonal projection of an ambient block vector onto the tangent space at X:
// W and u_raw pass through; V columns lose their radial component
// (zeta_j = E_j - Re(V_j^H E_j) V_j); phi entries likewise on the unit circle.
TangentVector project_tangent(const ProductPoint& X, const TangentVector& E);

// Step alpha*d from X and map back onto the search space: plain addition for
// W / u_raw, column renormalisation for V, modulus renormalisation for phi.
// Throws DegenerateRetraction when a normalisation denominator vanishes.
ProductPoint retract(const ProductPoint& X, const TangentVector& d, double alpha);

// Vector transport into the tangent space at `target` (projection transport).
TangentVector transport(const ProductPoint& target, const TangentVector& zeta);

// Ambient factor-wise displacement norm ||X - Y||.
double displacement(const ProductPoint& X, const ProductPoint& Y);

// Feasibility-of-representation diagnostics (used by tests and input checks).
bool on_manifold(const ProductPoint& X, double tol = 1e-10);
bool in_tangent_space(const ProductPoint& X, const TangentVector& z, double tol = 1e-10);

// Random draws for tests and initialisation: W ~ CN(0,1) entries, V columns
// normalised, phi = exp(j theta), u_raw ~ N(0, spread^2).
ProductPoint random_point(int M, int K_c, int K_t, int N, int n_ctrl,
                          std::mt19937_64& rng, double u_spread = 2.0);
TangentVector random_ambient(const ProductPoint& X, std::mt19937_64& rng);

}  // namespace prmo
