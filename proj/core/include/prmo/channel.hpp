#pragma once

#include <vector>

#include "prmo/manifold.hpp"
#include "prmo/scenario.hpp"

namespace prmo {

// Elementwise box mapping u = A * sigmoid(u_raw); keeps every coordinate in
// (0, A) for finite inputs.
Eigen::VectorXd position_projection(const Eigen::VectorXd& u_raw, double A);

// Elementwise derivative d u / d u_raw = A * s * (1 - s).
Eigen::VectorXd position_projection_derivative(const Eigen::VectorXd& u_raw, double A);

// Inverse mapping (logit), clamped to |u_raw| <= 30 so that boundary inputs
// stay finite. Requires 0 < u_i < A... values at the boundary saturate.
Eigen::VectorXd position_projection_inverse(const Eigen::VectorXd& u, double A);

// Element positions of a x a rigid sub-arrays around each centre, row-major
// within a sub-array, half-wavelength pitch:
//   t(i,j) = c + lambda * ( (2j - a - 1)/4 , (-2i + a + 1)/4 ),  i,j = 1..a.
// a == 1 returns the input unchanged (bitwise). Layout (x1,y1,x2,y2,...).
Eigen::VectorXd expand_array_positions(const Eigen::VectorXd& centers, int a, double lambda);

// Adjoint of expand_array_positions: accumulates per-element gradient
// contributions back onto the centre coordinates.
Eigen::VectorXd reduce_element_gradient(const Eigen::VectorXd& g_elem, int a);

// Minimum admissible centre separation (sqrt(2)*(a-1) + 2) * lambda / 4.
double min_center_distance(int a, double lambda);

// Steering-phase tables over the L BS-surface paths:
//   arrival[l,n]   = exp(+j k rho_r[:,l]^T t_n)
//   departure[l,n] = exp(-j k rho_r[:,l]^T t_n)  (conjugate phases)
Eigen::MatrixXcd arrival_frm(const Scenario& sc, const Eigen::VectorXd& elems);
Eigen::MatrixXcd departure_frm(const Scenario& sc, const Eigen::VectorXd& elems);

// BS -> surface channel, N x M:
//   G[n,m] = sum_l sigma_G[l] exp(j k (rho_t[l] b[m] - rho_r[:,l]^T t_n)).
Eigen::MatrixXcd build_bs_irs_channel(const Scenario& sc, const Eigen::VectorXd& elems);

// Surface -> user responses, K_c vectors of length N:
//   f_k[n] = sum_l sigma_f[k][l] exp(j k rho_r[:,l]^T t_n).
std::vector<Eigen::VectorXcd> build_irs_cu_responses(const Scenario& sc,
                                                     const Eigen::VectorXd& elems);

// Everything the metrics/gradient layers need at one operating point.
struct ChannelSet {
  Eigen::MatrixXcd G;                 // N x M
  std::vector<Eigen::VectorXcd> f;    // K_c, each N
  std::vector<Eigen::VectorXcd> h_C;  // K_c, each M: h_C = G^H diag(f_k) phi
  std::vector<Eigen::VectorXcd> h_d;  // K_t, each M direct steering responses
  std::vector<Eigen::VectorXcd> h_r;  // K_t, each N surface steering responses
  std::vector<Eigen::VectorXcd> h_S;  // K_t, each M: h_S = h_d + G^H diag(h_r) phi
  std::vector<Eigen::MatrixXcd> H_S;  // K_t, each M x M rank-1: conj(h_S) h_S^H
};

// Cascade at explicit reflection coefficients / element positions.
ChannelSet build_channels_at(const Scenario& sc, const Eigen::VectorXcd& phi,
                             const Eigen::VectorXd& elems);

// Cascade at a search-space point (applies sigmoid box + sub-array expansion).
ChannelSet build_channels(const Scenario& sc, const ProductPoint& X);

// Element positions implied by raw centre coordinates.
Eigen::VectorXd element_positions(const Scenario& sc, const Eigen::VectorXd& u_raw);

// Derivatives of the position-dependent channel entries w.r.t. one element's
// 2-D position t_n:
//   dG(m, :)  = d G[n,m] / d t_n            (M x 2)
//   df[k]     = d f_k[n] / d t_n            (1 x 2)
//   dh_r[j]   = d h_r[j][n] / d t_n         (1 x 2)
struct ElementPositionDerivatives {
  Eigen::MatrixXcd dG;
  std::vector<Eigen::RowVector2cd> df;
  std::vector<Eigen::RowVector2cd> dh_r;
};
ElementPositionDerivatives element_position_derivatives(const Scenario& sc,
                                                        const Eigen::VectorXd& elems,
                                                        int n);

}  // namespace prmo
