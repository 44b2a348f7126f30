#include "prmo/metrics.hpp"

#include <cmath>

namespace prmo {

CommRate comm_rate(const Eigen::MatrixXcd& W, const Eigen::VectorXcd& h_C_k,
                   double sigma2, int k) {
  if (k < 0 || k >= W.cols())
    throw std::invalid_argument("comm_rate: column index out of range");
  if (h_C_k.size() != W.rows())
    throw std::invalid_argument("comm_rate: channel length must match antenna count");
  if (sigma2 <= 0.0) throw std::invalid_argument("comm_rate: noise power must be positive");

  const Eigen::RowVectorXcd y = h_C_k.adjoint() * W;  // y_j = h^H w_j
  double interference = 0.0;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (j != k) interference += std::norm(y[j]);
  }
  CommRate r;
  r.sinr = std::norm(y[k]) / (interference + sigma2);
  r.rate = std::log2(1.0 + r.sinr);
  return r;
}

cxd block_quadratic(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& W,
                    const Eigen::VectorXcd& v) {
  const Eigen::Index M = H.rows();
  if (H.cols() != M) throw std::invalid_argument("block_quadratic: H must be square");
  if (W.rows() != M) throw std::invalid_argument("block_quadratic: row mismatch");
  if (v.size() != M * W.cols())
    throw std::invalid_argument("block_quadratic: filter length must be M * cols(W)");

  cxd q(0.0, 0.0);
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    q += v.segment(j * M, M).dot(H * W.col(j));  // Eigen dot conjugates the left arg
  }
  return q;
}

double radar_sinr(const Scenario& sc, const ChannelSet& ch,
                  const Eigen::MatrixXcd& W, const Eigen::VectorXcd& v_k, int k) {
  if (k < 0 || k >= sc.K_t) throw std::invalid_argument("radar_sinr: target index out of range");
  const double vv = v_k.squaredNorm();
  if (vv == 0.0) throw std::invalid_argument("radar_sinr: filter must be non-zero");

  double signal = 0.0;
  double interference = 0.0;
  for (int j = 0; j < sc.K_t; ++j) {
    const double a2 = sc.rcs[j] * sc.rcs[j];
    const double term = a2 * std::norm(block_quadratic(ch.H_S[j], W, v_k));
    if (j == k) {
      signal = sc.T * term;
    } else {
      interference += sc.T * term;
    }
  }
  return signal / (interference + sc.K_t * sc.sigma_S2 * vv);
}

double ConstraintValues::max_violation() const {
  double m = -std::numeric_limits<double>::infinity();
  if (comm.size() > 0) m = std::max(m, comm.maxCoeff());
  if (sense.size() > 0) m = std::max(m, sense.maxCoeff());
  if (dist.size() > 0) m = std::max(m, dist.maxCoeff());
  if (!std::isfinite(m)) m = 0.0;  // no constraints at all
  return m;
}

ConstraintValues constraint_values(const Scenario& sc, const ProductPoint& X,
                                   const ChannelSet& ch) {
  ConstraintValues c;
  c.comm.resize(sc.K_c);
  for (int k = 0; k < sc.K_c; ++k) {
    c.comm[k] = sc.gamma_rate[k] - comm_rate(X.W, ch.h_C[k], sc.sigma_c2[k], k).rate;
  }
  c.sense.resize(sc.K_t);
  for (int t = 0; t < sc.K_t; ++t) {
    c.sense[t] = sc.chi[t] - radar_sinr(sc, ch, X.W, X.V.col(t), t);
  }
  const int n_ctrl = sc.n_ctrl();
  const Eigen::VectorXd centers = position_projection(X.u_raw, sc.A);
  const double d_min = min_center_distance(sc.a, sc.lambda);
  c.dist.resize(static_cast<Eigen::Index>(n_ctrl) * (n_ctrl - 1) / 2);
  Eigen::Index p = 0;
  for (int i = 0; i < n_ctrl; ++i) {
    for (int j = i + 1; j < n_ctrl; ++j) {
      const double dx = centers[2 * i] - centers[2 * j];
      const double dy = centers[2 * i + 1] - centers[2 * j + 1];
      c.dist[p++] = d_min - std::sqrt(dx * dx + dy * dy);
    }
  }
  return c;
}

ConstraintValues constraint_values(const Scenario& sc, const ProductPoint& X) {
  return constraint_values(sc, X, build_channels(sc, X));
}

double lq_penalty(double x, double u) {
  if (u <= 0.0) throw std::invalid_argument("lq_penalty: knee width must be positive");
  if (x <= 0.0) return 0.0;
  if (x <= u) return x * x / (2.0 * u);
  return x - u / 2.0;
}

namespace {

Evaluation objective_impl(const ProductPoint& X, const PenaltyParams& p,
                          const ConstraintValues& cons) {
  Evaluation e;
  e.power = X.W.squaredNorm();
  e.max_violation = cons.max_violation();
  double pen = 0.0;
  if (p.rho != 0.0) {
    for (Eigen::Index i = 0; i < cons.comm.size(); ++i) pen += lq_penalty(cons.comm[i], p.u);
    for (Eigen::Index i = 0; i < cons.sense.size(); ++i) pen += lq_penalty(cons.sense[i], p.u);
    for (Eigen::Index i = 0; i < cons.dist.size(); ++i) pen += lq_penalty(cons.dist[i], p.u);
  }
  e.g = e.power + p.rho * pen;
  return e;
}

}  // namespace

Evaluation smoothed_objective(const Scenario& sc, const ProductPoint& X,
                              const PenaltyParams& p, const ChannelSet& ch) {
  return objective_impl(X, p, constraint_values(sc, X, ch));
}

Evaluation smoothed_objective(const Scenario& sc, const ProductPoint& X,
                              const PenaltyParams& p) {
  return objective_impl(X, p, constraint_values(sc, X));
}

}  // namespace prmo
