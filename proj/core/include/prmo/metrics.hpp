#pragma once

#include "prmo/channel.hpp"

namespace prmo {

struct CommRate {
  double sinr = 0.0;
  double rate = 0.0;  // log2(1 + sinr)
};

// Downlink SINR/rate of user k: the useful column is W.col(k); every other
// column (remaining users and all sensing streams) is interference.
CommRate comm_rate(const Eigen::MatrixXcd& W, const Eigen::VectorXcd& h_C_k,
                   double sigma2, int k);

// v^H (I kron H) w evaluated blockwise as sum_j v_j^H (H w_j) with v split
// into M-sized blocks; the Kronecker product is never materialised.
cxd block_quadratic(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& W,
                    const Eigen::VectorXcd& v);

// Echo SINR of target k after matched filtering over T symbols:
//   T a_k^2 |q_k|^2 / ( T sum_{j != k} a_j^2 |q_j|^2 + K_t sigma_S^2 v^H v ),
// q_j = v^H (I kron H_S_j) w. Requires v != 0.
double radar_sinr(const Scenario& sc, const ChannelSet& ch,
                  const Eigen::MatrixXcd& W, const Eigen::VectorXcd& v_k, int k);

// Stacked constraint residuals h_i <= 0 means satisfied:
//   comm[k]  = gamma_k - rate_k
//   sense[t] = chi_t - sinr_t
//   dist[p]  = d_min - ||c_i - c_j||  over unordered centre pairs i < j.
struct ConstraintValues {
  Eigen::VectorXd comm;
  Eigen::VectorXd sense;
  Eigen::VectorXd dist;

  double max_violation() const;
  Eigen::Index total() const { return comm.size() + sense.size() + dist.size(); }
  bool feasible(double tol) const { return max_violation() <= tol; }
};

ConstraintValues constraint_values(const Scenario& sc, const ProductPoint& X,
                                   const ChannelSet& ch);
ConstraintValues constraint_values(const Scenario& sc, const ProductPoint& X);

// Piecewise linear-quadratic upper bound of max(0, x) with knee width u > 0:
// 0 for x <= 0, x^2/(2u) on (0, u], x - u/2 beyond. Differs from the hinge by
// at most u/2.
double lq_penalty(double x, double u);

struct PenaltyParams {
  double rho = 1.0;  // penalty weight
  double u = 1.0;    // smoothing knee width
};

struct Evaluation {
  double g = 0.0;              // ||W||_F^2 + rho * sum_i P(h_i, u)
  double power = 0.0;          // ||W||_F^2
  double max_violation = 0.0;  // max_i h_i
};

Evaluation smoothed_objective(const Scenario& sc, const ProductPoint& X,
                              const PenaltyParams& p);
Evaluation smoothed_objective(const Scenario& sc, const ProductPoint& X,
                              const PenaltyParams& p, const ChannelSet& ch);

}  // namespace prmo
