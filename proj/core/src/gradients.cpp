#include "prmo/gradients.hpp"

#include <cmath>

namespace prmo {

namespace {

constexpr double kLog2 = M_LN2;

// Reusable pieces of one constraint's ambient gradient. Positions are
// accumulated at element level (d/dt_n) and folded through the sub-array
// reduction and the box-mapping chain at the end.
struct BlockAccumulator {
  Eigen::MatrixXcd W;
  Eigen::MatrixXcd V;
  Eigen::VectorXcd phi;
  Eigen::VectorXd t_elem;  // 2N element-position gradient
  Eigen::VectorXd centers; // 2*N_ctrl centre-position gradient (separation terms)

  explicit BlockAccumulator(const Scenario& sc, const ProductPoint& X)
      : W(Eigen::MatrixXcd::Zero(X.W.rows(), X.W.cols())),
        V(Eigen::MatrixXcd::Zero(X.V.rows(), X.V.cols())),
        phi(Eigen::VectorXcd::Zero(X.phi.size())),
        t_elem(Eigen::VectorXd::Zero(2 * sc.N)),
        centers(Eigen::VectorXd::Zero(X.u_raw.size())) {}
};

// Gradient of the rate SINR gamma_C,k in every variable it touches, scaled by
// `weight` and accumulated. All pieces follow from
//   gamma = |y_k|^2 / D,  y_j = h^H w_j,  D = sum_{j != k} |y_j|^2 + sigma^2,
// with h = G^H diag(f_k) phi depending on phi and the element positions.
void accumulate_comm_sinr_gradient(const Scenario& sc, const ProductPoint& X,
                                   const ChannelSet& ch,
                                   const std::vector<ElementPositionDerivatives>& elem_d,
                                   int k, double weight, BlockAccumulator* acc) {
  const Eigen::VectorXcd& h = ch.h_C[k];
  const Eigen::RowVectorXcd y = h.adjoint() * X.W;
  double D = sc.sigma_c2[k];
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (j != k) D += std::norm(y[j]);
  }
  const double gamma = std::norm(y[k]) / D;

  // Beamformer columns: 2 h y_k / D for the useful one, -2 gamma h y_j / D
  // for the interfering ones.
  for (Eigen::Index j = 0; j < X.W.cols(); ++j) {
    const double c = (j == k) ? 2.0 / D : -2.0 * gamma / D;
    acc->W.col(j) += (weight * c) * (h * y[j]);
  }

  // Channel-vector gradient grad_h gamma = (2/D)(w_k conj(y_k)
  //   - gamma sum_{j != k} w_j conj(y_j)).
  Eigen::VectorXcd gh = X.W.col(k) * std::conj(y[k]);
  for (Eigen::Index j = 0; j < X.W.cols(); ++j) {
    if (j != k) gh -= gamma * (X.W.col(j) * std::conj(y[j]));
  }
  gh *= 2.0 / D;

  // Reflection coefficients: grad_phi = diag(conj f_k) G grad_h.
  const Eigen::VectorXcd Ggh = ch.G * gh;
  for (int n = 0; n < sc.N; ++n) {
    acc->phi[n] += weight * std::conj(ch.f[k][n]) * Ggh[n];
  }

  // Element positions: d gamma / d t_n
  //   = Re[ conj(phi_n) ( conj(f_k[n]) (grad_h^T dG_n) + conj(df_k[n]) (G_n grad_h) ) ].
  for (int n = 0; n < sc.N; ++n) {
    const auto& ed = elem_d[n];
    const Eigen::RowVector2cd gh_dG = gh.transpose() * ed.dG;        // 1 x 2
    const cxd gh_G = ch.G.row(n) * gh;                               // scalar
    const Eigen::RowVector2cd d_row =
        std::conj(X.phi[n]) * (std::conj(ch.f[k][n]) * gh_dG + gh_G * ed.df[k].conjugate());
    acc->t_elem[2 * n] += weight * d_row[0].real();
    acc->t_elem[2 * n + 1] += weight * d_row[1].real();
  }
}

// Gradient of the echo SINR gamma_S,k. With q_j = v^H (I kron H_S_j) w and
// c_j = conj(h_S_j):
//   q_j = c_j^T (W V_k^H) c_j,  so  d q_j = g_j^T d conj(h_S_j),
//   g_j = (P + P^T) c_j,  P = W V_k^H.
void accumulate_sense_sinr_gradient(const Scenario& sc, const ProductPoint& X,
                                    const ChannelSet& ch,
                                    const std::vector<ElementPositionDerivatives>& elem_d,
                                    int k, double weight, BlockAccumulator* acc) {
  const int M = sc.M;
  const Eigen::Index cols = X.W.cols();
  const Eigen::VectorXcd v = X.V.col(k);
  const Eigen::Map<const Eigen::MatrixXcd> Vk(v.data(), M, cols);

  std::vector<cxd> q(sc.K_t);
  for (int j = 0; j < sc.K_t; ++j) q[j] = block_quadratic(ch.H_S[j], X.W, v);

  const double vv = v.squaredNorm();
  const double a2k = sc.rcs[k] * sc.rcs[k];
  double den = sc.K_t * sc.sigma_S2 * vv;
  for (int j = 0; j < sc.K_t; ++j) {
    if (j != k) den += sc.T * sc.rcs[j] * sc.rcs[j] * std::norm(q[j]);
  }
  const double num = sc.T * a2k * std::norm(q[k]);
  const double gamma = num / den;

  // Per-target weights: d gamma = sum_j omega_j d|q_j|^2 - (gamma/den) d(noise).
  std::vector<double> omega(sc.K_t);
  for (int j = 0; j < sc.K_t; ++j) {
    const double a2j = sc.rcs[j] * sc.rcs[j];
    omega[j] = (j == k) ? sc.T * a2k / den : -gamma * sc.T * a2j / den;
  }

  // Filter block: d|q_j|^2/dv* = m_j conj(q_j) with m_j = vec(H_S_j W);
  // the noise term contributes K_t sigma_S^2 v.
  Eigen::VectorXcd gv = Eigen::VectorXcd::Zero(v.size());
  for (int j = 0; j < sc.K_t; ++j) {
    const Eigen::MatrixXcd HW = ch.H_S[j] * X.W;
    gv += omega[j] * std::conj(q[j]) * Eigen::Map<const Eigen::VectorXcd>(HW.data(), HW.size());
  }
  gv -= (gamma / den) * (sc.K_t * sc.sigma_S2) * v;
  acc->V.col(k) += (2.0 * weight) * gv;

  // Beamformer block: d|q_j|^2/dw* = q_j vec(H_S_j^H V_k).
  Eigen::MatrixXcd gw = Eigen::MatrixXcd::Zero(M, cols);
  for (int j = 0; j < sc.K_t; ++j) {
    gw += (omega[j] * q[j]) * (ch.H_S[j].adjoint() * Vk);
  }
  acc->W += (2.0 * weight) * gw;

  // Shared channel-side factors g_j = (P + P^T) conj(h_S_j), P = W V_k^H.
  const Eigen::MatrixXcd P = X.W * Vk.adjoint();
  const Eigen::MatrixXcd Psym = P + P.transpose();
  std::vector<Eigen::VectorXcd> gvec(sc.K_t);
  for (int j = 0; j < sc.K_t; ++j) gvec[j] = Psym * ch.h_S[j].conjugate();

  // Reflection coefficients: d|q_j|^2/dphi*
  //   = conj(q_j) diag(conj h_r_j) G g_j.
  for (int j = 0; j < sc.K_t; ++j) {
    const Eigen::VectorXcd Gg = ch.G * gvec[j];
    const cxd cq = std::conj(q[j]);
    for (int n = 0; n < sc.N; ++n) {
      acc->phi[n] += (2.0 * weight * omega[j]) * cq * std::conj(ch.h_r[j][n]) * Gg[n];
    }
  }

  // Element positions: dq_j/dt_n = conj(phi_n) [ conj(h_r_j[n]) (g_j^T dG_n)
  //   + conj(dh_r_j[n]) (G_n g_j) ], then d|q_j|^2 = 2 Re(conj(q_j) dq_j).
  for (int j = 0; j < sc.K_t; ++j) {
    const cxd cq = std::conj(q[j]);
    for (int n = 0; n < sc.N; ++n) {
      const auto& ed = elem_d[n];
      const Eigen::RowVector2cd g_dG = gvec[j].transpose() * ed.dG;
      const cxd g_G = ch.G.row(n) * gvec[j];
      const Eigen::RowVector2cd dq =
          std::conj(X.phi[n]) *
          (std::conj(ch.h_r[j][n]) * g_dG + g_G * ed.dh_r[j].conjugate());
      acc->t_elem[2 * n] += weight * omega[j] * 2.0 * (cq * dq[0]).real();
      acc->t_elem[2 * n + 1] += weight * omega[j] * 2.0 * (cq * dq[1]).real();
    }
  }
}

void accumulate_distance_gradients(const Scenario& sc, const ProductPoint& X,
                                   const ConstraintValues& cons, double rho, double u,
                                   BlockAccumulator* acc) {
  const int n_ctrl = sc.n_ctrl();
  const Eigen::VectorXd centers = position_projection(X.u_raw, sc.A);
  Eigen::Index p = 0;
  for (int i = 0; i < n_ctrl; ++i) {
    for (int j = i + 1; j < n_ctrl; ++j, ++p) {
      const double w = rho * lq_penalty_derivative(cons.dist[p], u);
      if (w == 0.0) continue;
      Eigen::Vector2d gi, gj;
      distance_pair_gradient(centers.segment<2>(2 * i), centers.segment<2>(2 * j),
                             &gi, &gj);
      acc->centers.segment<2>(2 * i) += w * gi;
      acc->centers.segment<2>(2 * j) += w * gj;
    }
  }
}

}  // namespace

double lq_penalty_derivative(double x, double u) {
  if (u <= 0.0) throw std::invalid_argument("lq_penalty_derivative: knee width must be positive");
  if (x <= 0.0) return 0.0;
  if (x <= u) return x / u;
  return 1.0;
}

void distance_pair_gradient(const Eigen::Vector2d& ci, const Eigen::Vector2d& cj,
                            Eigen::Vector2d* gi, Eigen::Vector2d* gj) {
  const Eigen::Vector2d diff = ci - cj;
  const double d = diff.norm();
  if (d == 0.0) {
    throw SingularGeometry("distance gradient undefined for coincident centres");
  }
  *gi = -diff / d;
  *gj = diff / d;
}

TangentVector euclidean_gradient(const Scenario& sc, const ProductPoint& X,
                                 const PenaltyParams& p) {
  TangentVector grad = zero_like(X);
  grad.W = 2.0 * X.W;
  if (p.rho == 0.0) return grad;

  const ChannelSet ch = build_channels(sc, X);
  const ConstraintValues cons = constraint_values(sc, X, ch);
  BlockAccumulator acc(sc, X);

  // Element-level derivative tables are needed by any active rate or echo
  // constraint; build them once.
  const bool any_metric_active =
      (cons.comm.size() > 0 && cons.comm.maxCoeff() > 0.0) ||
      (cons.sense.size() > 0 && cons.sense.maxCoeff() > 0.0);
  std::vector<ElementPositionDerivatives> elem_d;
  if (any_metric_active) {
    const Eigen::VectorXd elems = element_positions(sc, X.u_raw);
    elem_d.resize(sc.N);
    for (int n = 0; n < sc.N; ++n) {
      elem_d[n] = element_position_derivatives(sc, elems, n);
    }
  }

  // Rate constraints h = gamma_k - log2(1 + sinr): chain factor
  // -1 / (ln 2 (1 + sinr)) on the SINR gradient.
  for (int k = 0; k < sc.K_c; ++k) {
    const double pd = lq_penalty_derivative(cons.comm[k], p.u);
    if (pd == 0.0) continue;
    const double sinr = comm_rate(X.W, ch.h_C[k], sc.sigma_c2[k], k).sinr;
    const double chain = -1.0 / (kLog2 * (1.0 + sinr));
    accumulate_comm_sinr_gradient(sc, X, ch, elem_d, k, p.rho * pd * chain, &acc);
  }

  // Echo constraints h = chi_t - sinr: chain factor -1.
  for (int t = 0; t < sc.K_t; ++t) {
    const double pd = lq_penalty_derivative(cons.sense[t], p.u);
    if (pd == 0.0) continue;
    accumulate_sense_sinr_gradient(sc, X, ch, elem_d, t, -p.rho * pd, &acc);
  }

  accumulate_distance_gradients(sc, X, cons, p.rho, p.u, &acc);

  grad.W += acc.W;
  grad.V = acc.V;
  grad.phi = acc.phi;
  // Fold element-position contributions onto centres, then through the box
  // mapping u = A sigmoid(u_raw).
  Eigen::VectorXd g_centers = acc.centers;
  if (any_metric_active) {
    g_centers += reduce_element_gradient(acc.t_elem, sc.a);
  }
  grad.u_raw = g_centers.cwiseProduct(position_projection_derivative(X.u_raw, sc.A));
  return grad;
}

TangentVector riemannian_gradient(const ProductPoint& X, const TangentVector& ambient) {
  return project_tangent(X, ambient);
}

std::vector<GradientBreakdownRow> gradient_breakdown(const Scenario& sc,
                                                     const ProductPoint& X,
                                                     const PenaltyParams& p) {
  const ChannelSet ch = build_channels(sc, X);
  const ConstraintValues cons = constraint_values(sc, X, ch);
  const Eigen::VectorXd elems = element_positions(sc, X.u_raw);
  std::vector<ElementPositionDerivatives> elem_d(sc.N);
  for (int n = 0; n < sc.N; ++n) elem_d[n] = element_position_derivatives(sc, elems, n);

  std::vector<GradientBreakdownRow> rows;
  auto push = [&](const std::string& name, double h, const BlockAccumulator& acc) {
    GradientBreakdownRow r;
    r.name = name;
    r.h = h;
    r.w_norm = acc.W.norm();
    r.v_norm = acc.V.norm();
    r.phi_norm = acc.phi.norm();
    const Eigen::VectorXd g_centers =
        acc.centers + reduce_element_gradient(acc.t_elem, sc.a);
    r.u_norm =
        g_centers.cwiseProduct(position_projection_derivative(X.u_raw, sc.A)).norm();
    rows.push_back(std::move(r));
  };

  for (int k = 0; k < sc.K_c; ++k) {
    BlockAccumulator acc(sc, X);
    const double pd = lq_penalty_derivative(cons.comm[k], p.u);
    if (pd != 0.0) {
      const double sinr = comm_rate(X.W, ch.h_C[k], sc.sigma_c2[k], k).sinr;
      accumulate_comm_sinr_gradient(sc, X, ch, elem_d, k,
                                    -p.rho * pd / (kLog2 * (1.0 + sinr)), &acc);
    }
    push("rate[" + std::to_string(k) + "]", cons.comm[k], acc);
  }
  for (int t = 0; t < sc.K_t; ++t) {
    BlockAccumulator acc(sc, X);
    const double pd = lq_penalty_derivative(cons.sense[t], p.u);
    if (pd != 0.0) {
      accumulate_sense_sinr_gradient(sc, X, ch, elem_d, t, -p.rho * pd, &acc);
    }
    push("echo[" + std::to_string(t) + "]", cons.sense[t], acc);
  }
  {
    BlockAccumulator acc(sc, X);
    accumulate_distance_gradients(sc, X, cons, p.rho, p.u, &acc);
    const double h = cons.dist.size() > 0 ? cons.dist.maxCoeff() : 0.0;
    push("separation", h, acc);
  }
  return rows;
}

std::vector<GradientCheckRow> check_gradient_fd(const Scenario& sc, const ProductPoint& X,
                                                const PenaltyParams& p, int n_dirs,
                                                double step, uint64_t seed) {
  std::mt19937_64 rng(seed);
  const TangentVector grad = euclidean_gradient(sc, X, p);
  auto g_at = [&](const TangentVector& d, double a) {
    ProductPoint Y = X;
    Y.W += a * d.W;
    Y.V += a * d.V;
    Y.phi += a * d.phi;
    Y.u_raw += a * d.u_raw;
    return smoothed_objective(sc, Y, p).g;
  };

  std::vector<GradientCheckRow> rows;
  const char* names[4] = {"W", "V", "phi", "u_raw"};
  for (int b = 0; b < 4; ++b) {
    for (int d = 0; d < n_dirs; ++d) {
      TangentVector dir = zero_like(X);
      TangentVector full = random_ambient(X, rng);
      switch (b) {
        case 0: dir.W = full.W; break;
        case 1: dir.V = full.V; break;
        case 2: dir.phi = full.phi; break;
        case 3: dir.u_raw = full.u_raw; break;
      }
      const double nn = norm(dir);
      if (nn == 0.0) continue;
      scale_in_place(dir, 1.0 / nn);
      // Fourth-order central stencil.
      const double fd = (8.0 * (g_at(dir, step) - g_at(dir, -step)) -
                         (g_at(dir, 2.0 * step) - g_at(dir, -2.0 * step))) /
                        (12.0 * step);
      GradientCheckRow r;
      r.block = names[b];
      r.analytic = inner(grad, dir);
      r.numeric = fd;
      r.rel_err = std::abs(r.analytic - fd) /
                  std::max({std::abs(r.analytic), std::abs(fd), 1e-12});
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

}  // namespace prmo
