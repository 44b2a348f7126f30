#include "prmo/init.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "prmo/metrics.hpp"

namespace prmo {

namespace {

// Points of a hexagonal lattice with pitch s filling [0, extent]^2 row-major,
// capped at n_max. Row r is vertically at r*s*sqrt(3)/2 and offset by s/2 on
// odd rows, so every nearest-neighbour distance equals s.
std::vector<Eigen::Vector2d> hex_lattice(double extent, double s, int n_max) {
  std::vector<Eigen::Vector2d> pts;
  const double row_pitch = s * std::sqrt(3.0) / 2.0;
  const double tiny = 1e-12 * std::max(1.0, extent);
  for (int r = 0;; ++r) {
    const double y = r * row_pitch;
    if (y > extent + tiny) break;
    const double x0 = (r % 2 == 0) ? 0.0 : 0.5 * s;
    if (x0 > extent + tiny) continue;
    const int cols = static_cast<int>(std::floor((extent - x0) / s + tiny)) + 1;
    for (int c = 0; c < cols; ++c) {
      pts.emplace_back(x0 + c * s, y);
      if (static_cast<int>(pts.size()) >= n_max) return pts;
    }
  }
  return pts;
}

}  // namespace

Eigen::VectorXd init_positions(int n_ctrl, double A, double d_min) {
  if (n_ctrl <= 0) throw std::invalid_argument("init_positions: n_ctrl must be positive");
  if (!(A > 0.0) || !(d_min > 0.0))
    throw std::invalid_argument("init_positions: A and d_min must be positive");
  // Raw zeros map to the centre of the region.
  if (n_ctrl == 1) return Eigen::VectorXd::Zero(2);

  // Keep a small interior margin: boundary placements would need saturated
  // raw coordinates where the box mapping has a vanishing derivative.
  const double margin = 0.05 * A;
  const double extent = A - 2.0 * margin;
  if (extent <= 0.0 ||
      static_cast<int>(hex_lattice(extent, d_min, n_ctrl).size()) < n_ctrl) {
    throw PackingInfeasible("cannot place " + std::to_string(n_ctrl) +
                            " centres with spacing " + std::to_string(d_min) +
                            " m in a " + std::to_string(A) + " m region");
  }

  // Largest pitch that still fits n_ctrl points (capacity is non-increasing
  // in the pitch, so bisection applies). Spreads the centres out as far as
  // the lattice family allows.
  double lo = d_min;                      // known to fit
  double hi = 2.0 * (extent + d_min);     // known not to fit (single point only)
  for (int it = 0; it < 64; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (static_cast<int>(hex_lattice(extent, mid, n_ctrl).size()) >= n_ctrl) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  std::vector<Eigen::Vector2d> pts = hex_lattice(extent, lo, n_ctrl);

  // Centre the occupied bounding box inside the region.
  Eigen::Vector2d pmin = pts.front(), pmax = pts.front();
  for (const auto& p : pts) {
    pmin = pmin.cwiseMin(p);
    pmax = pmax.cwiseMax(p);
  }
  const Eigen::Vector2d shift = 0.5 * (Eigen::Vector2d::Constant(A) - (pmax - pmin)) - pmin;

  Eigen::VectorXd centers(2 * n_ctrl);
  for (int i = 0; i < n_ctrl; ++i) centers.segment<2>(2 * i) = pts[i] + shift;
  return position_projection_inverse(centers, A);
}

std::pair<Eigen::VectorXcd, Eigen::MatrixXcd> init_phase_filters(int N, int M, int K_c,
                                                                 int K_t,
                                                                 std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uang(0.0, 2.0 * M_PI);
  Eigen::VectorXcd phi(N);
  for (int n = 0; n < N; ++n) phi[n] = std::polar(1.0, uang(rng));

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd V(M * (M + K_c), K_t);
  for (int k = 0; k < K_t; ++k) {
    for (Eigen::Index i = 0; i < V.rows(); ++i)
      V(i, k) = cxd(gauss(rng), gauss(rng)) / std::sqrt(2.0);
    const double nrm = V.col(k).norm();
    if (nrm > 0.0) V.col(k) /= nrm;
  }
  return {std::move(phi), std::move(V)};
}

std::vector<SdpConstraint> beamforming_sdp_constraints(const Scenario& sc,
                                                       const ChannelSet& ch,
                                                       const Eigen::MatrixXcd& V) {
  const int M = sc.M;
  const int K = sc.K_c + sc.M;   // beamformer columns
  const int D = M * K;           // lifted dimension, X over vec(W)
  std::vector<SdpConstraint> cons;
  cons.reserve(sc.K_c + sc.K_t);

  // Rate constraint of user k: |h^H w_k|^2 >= g_k (sum_{j!=k} |h^H w_j|^2
  // + sigma^2) with g_k = 2^Gamma_k - 1, written as one block-diagonal form.
  for (int k = 0; k < sc.K_c; ++k) {
    const double g_k = std::exp2(sc.gamma_rate[k]) - 1.0;
    const Eigen::MatrixXcd hh = ch.h_C[k] * ch.h_C[k].adjoint();
    SdpConstraint c;
    c.P = Eigen::MatrixXcd::Zero(D, D);
    for (int j = 0; j < K; ++j)
      c.P.block(j * M, j * M, M, M) = (j == k ? 1.0 : -g_k) * hh;
    c.b = g_k * sc.sigma_c2[k];
    cons.push_back(std::move(c));
  }

  // Echo-SINR constraint of target k at receive filter v_k:
  //   T a_k^2 |q_k|^2 - chi_k T sum_{j!=k} a_j^2 |q_j|^2 >= chi_k K_t
  //   sigma_S^2 ||v_k||^2,  q_j = z_{j,k}^H vec(W),
  // where z_{j,k} stacks H_{S,j}^H v_{k,c} over the per-column slices v_{k,c}.
  for (int k = 0; k < sc.K_t; ++k) {
    const Eigen::Map<const Eigen::MatrixXcd> Vk(V.col(k).data(), M, K);
    SdpConstraint c;
    c.P = Eigen::MatrixXcd::Zero(D, D);
    for (int j = 0; j < sc.K_t; ++j) {
      Eigen::MatrixXcd Zj = ch.H_S[j].adjoint() * Vk;  // M x K
      const Eigen::Map<const Eigen::VectorXcd> z(Zj.data(), D);
      const double w = (j == k ? 1.0 : -sc.chi[k]) * sc.T * sc.rcs[j] * sc.rcs[j];
      c.P += w * (z * z.adjoint());
    }
    c.b = sc.chi[k] * sc.K_t * sc.sigma_S2 * V.col(k).squaredNorm();
    cons.push_back(std::move(c));
  }
  return cons;
}

namespace {

// Quadratic form values t_i = w^H P_i w for every constraint.
Eigen::VectorXd constraint_quadratics(const std::vector<SdpConstraint>& cons,
                                      const Eigen::VectorXcd& w) {
  Eigen::VectorXd t(cons.size());
  for (size_t i = 0; i < cons.size(); ++i) t[i] = (w.adjoint() * cons[i].P * w)(0).real();
  return t;
}

// Smallest power scaling beta^2 making beta*w satisfy every constraint, or
// NaN when some constraint cannot be met by scaling (t_i <= 0 with b_i > 0).
double required_power_scale(const std::vector<SdpConstraint>& cons,
                            const Eigen::VectorXd& t) {
  double s2 = 0.0;
  for (size_t i = 0; i < cons.size(); ++i) {
    if (cons[i].b <= 0.0) {
      if (t[i] + 1e-300 < cons[i].b) return std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    if (t[i] <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    s2 = std::max(s2, cons[i].b / t[i]);
  }
  return s2;
}

Eigen::MatrixXcd reshape_beamformer(const Eigen::VectorXcd& w, int M, int K) {
  return Eigen::Map<const Eigen::MatrixXcd>(w.data(), M, K);
}

// Scales W (keeping its column pattern) just far enough, plus headroom, that
// every constraint holds. Returns an empty matrix when scaling cannot reach
// feasibility or would exceed the power cap.
Eigen::MatrixXcd scale_to_feasible(const Eigen::MatrixXcd& W,
                                   const std::vector<SdpConstraint>& cons,
                                   const InitConfig& cfg) {
  const Eigen::Map<const Eigen::VectorXcd> w(W.data(), W.size());
  const double s2 = required_power_scale(cons, constraint_quadratics(cons, w));
  if (!std::isfinite(s2)) return {};
  const double scaled = cfg.fallback_margin * std::max(s2, 1e-12);
  if (scaled * W.squaredNorm() > cfg.power_cap_watts) return {};
  return std::sqrt(scaled) * W;
}

// Matched-filter fallback: communication columns point at the user channels,
// sensing columns at the target responses, all scaled together until every
// constraint holds. If the sensing columns leak too much interference into
// the users for any scaling to work, retried with communication beams only
// (those also illuminate the targets, so the echo constraints can still be
// met).
Eigen::MatrixXcd fallback_beamformer(const Scenario& sc, const ChannelSet& ch,
                                     const std::vector<SdpConstraint>& cons,
                                     const InitConfig& cfg) {
  const int M = sc.M;
  const int K = sc.K_c + sc.M;
  Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(M, K);
  for (int k = 0; k < sc.K_c; ++k) {
    const double nrm = ch.h_C[k].norm();
    if (nrm <= 0.0) throw InitFailure("matched-filter init: user channel is zero");
    W.col(k) = ch.h_C[k] / nrm;
  }
  for (int i = 0; i < M; ++i) {
    if (sc.K_t > 0) {
      const Eigen::VectorXcd& hs = ch.h_S[i % sc.K_t];
      const double nrm = hs.norm();
      if (nrm <= 0.0) throw InitFailure("matched-filter init: target response is zero");
      W.col(sc.K_c + i) = hs / nrm;
    } else {
      W(i, sc.K_c + i) = 1.0;
    }
  }

  Eigen::MatrixXcd scaled = scale_to_feasible(W, cons, cfg);
  if (scaled.size() == 0 && sc.K_t > 0) {
    W.rightCols(M).setZero();
    scaled = scale_to_feasible(W, cons, cfg);
  }
  if (scaled.size() == 0)
    throw InitFailure("matched-filter init: constraints unreachable under the power cap");
  return scaled;
}

}  // namespace

Eigen::MatrixXcd init_beamforming_sdr(const Scenario& sc, const ChannelSet& ch,
                                      const Eigen::MatrixXcd& V, const InitConfig& cfg,
                                      std::mt19937_64& rng) {
  const int M = sc.M;
  const int K = sc.K_c + sc.M;
  const int D = M * K;
  const std::vector<SdpConstraint> cons = beamforming_sdp_constraints(sc, ch, V);

  if (cfg.sdr_enabled) {
    const SdpResult sdp = solve_min_trace_sdp(cons, D, cfg.sdp);
    if (sdp.feasible) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sdp.X);
      const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);

      // Candidate set: dominant eigenvector first, then Gaussian draws
      // X^{1/2} xi. Each candidate is rescaled to the cheapest feasible
      // power; the best one wins.
      std::vector<Eigen::VectorXcd> cands;
      cands.push_back(std::sqrt(lam[D - 1]) * es.eigenvectors().col(D - 1));
      const Eigen::MatrixXcd half =
          es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (int r = 0; r < cfg.sdr_randomizations; ++r) {
        Eigen::VectorXcd xi(D);
        for (int i = 0; i < D; ++i) xi[i] = cxd(gauss(rng), gauss(rng)) / std::sqrt(2.0);
        cands.push_back(half * xi);
      }

      double best_power = std::numeric_limits<double>::infinity();
      Eigen::VectorXcd best;
      for (const auto& wc : cands) {
        const double n2 = wc.squaredNorm();
        if (n2 <= 0.0) continue;
        const double s2 = required_power_scale(cons, constraint_quadratics(cons, wc));
        if (!std::isfinite(s2)) continue;
        const double power = std::max(s2, 1e-300) * n2;
        if (power < best_power) {
          best_power = power;
          best = std::sqrt(std::max(s2, 1e-300)) * wc;
        }
      }
      if (best.size() == D && best_power <= cfg.power_cap_watts)
        return reshape_beamformer(best, M, K);
    }
  }
  return fallback_beamformer(sc, ch, cons, cfg);
}

ProductPoint initial_point(const Scenario& sc, const InitConfig& cfg) {
  sc.validate();
  ProductPoint X;
  X.u_raw = init_positions(sc.n_ctrl(), sc.A, min_center_distance(sc.a, sc.lambda));

  std::mt19937_64 rng(cfg.seed);
  auto [phi, V] = init_phase_filters(sc.N, sc.M, sc.K_c, sc.K_t, rng);
  X.phi = std::move(phi);
  X.V = std::move(V);

  const ChannelSet ch = build_channels_at(sc, X.phi, element_positions(sc, X.u_raw));
  X.W = init_beamforming_sdr(sc, ch, X.V, cfg, rng);
  return X;
}

}  // namespace prmo
