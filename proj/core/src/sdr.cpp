#include "prmo/sdr.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace prmo {

namespace {

// Hermitian part, guarding against drift accumulated by repeated projections.
Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& X) {
  return 0.5 * (X + X.adjoint());
}

// Projection onto the PSD cone: clamp negative eigenvalues to zero.
Eigen::MatrixXcd project_psd(const Eigen::MatrixXcd& X) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian_part(X));
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

double inner_re(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
  return A.cwiseProduct(B.conjugate()).sum().real();
}

struct Halfspace {
  Eigen::MatrixXcd P;
  double b = 0.0;
  double norm2 = 0.0;  // <P, P>
};

// Worst relative violation across the half-space constraints.
double max_violation(const Eigen::MatrixXcd& X, const std::vector<Halfspace>& hs) {
  double worst = 0.0;
  for (const auto& h : hs) {
    const double scale = std::max(1.0, std::abs(h.b));
    worst = std::max(worst, (h.b - inner_re(h.P, X)) / scale);
  }
  return worst;
}

struct ProbeResult {
  Eigen::MatrixXcd X;
  bool feasible = false;
  int sweeps = 0;
};

// Product-space Douglas-Rachford splitting for
//   min tr(X)  s.t.  X PSD,  <P_k, X> >= b_k.
// One product-space block per constraint set. The consensus projection is the
// block mean; the separable prox applies project_psd(. - t I) to block 0 (the
// trace term rides along with the cone indicator, since tr X = <I, X>) and an
// exact half-space projection to each remaining block. The PSD prox output is
// the candidate solution: it is PSD by construction and converges to the
// minimiser together with the consensus point.
ProbeResult min_trace_splitting(const std::vector<Halfspace>& hs, int dim,
                                const SdpOptions& opt) {
  ProbeResult out;
  const int blocks = static_cast<int>(hs.size()) + 1;

  // Trace prox step: the scale the half-spaces force onto X (with unit-norm
  // P, any feasible X has norm at least max b).
  double t = opt.splitting_step;
  if (t <= 0.0) {
    double scale = 0.0;
    for (const auto& h : hs) scale = std::max(scale, h.b);
    t = scale > 0.0 ? scale : 1e-6;
  }
  const Eigen::MatrixXcd shift = t * Eigen::MatrixXcd::Identity(dim, dim);

  std::vector<Eigen::MatrixXcd> z(blocks, Eigen::MatrixXcd::Zero(dim, dim));
  Eigen::MatrixXcd xbar = Eigen::MatrixXcd::Zero(dim, dim);
  std::vector<Eigen::MatrixXcd> p(blocks);
  // Trace of the last feasible candidate, sampled every `window` sweeps: when
  // the candidate stays feasible and its trace has stopped moving, further
  // sweeps only polish the fixed-point residual.
  constexpr int window = 100;
  double trace_at_window = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < opt.splitting_max_sweeps; ++sweep) {
    p[0] = project_psd(2.0 * xbar - z[0] - shift);
    for (int k = 1; k < blocks; ++k) {
      const Halfspace& h = hs[k - 1];
      p[k] = 2.0 * xbar - z[k];
      const double gap = h.b - inner_re(h.P, p[k]);
      if (gap > 0.0) p[k] += gap * h.P;  // ||P|| = 1 after normalisation
    }
    Eigen::MatrixXcd pbar = p[0];
    for (int k = 1; k < blocks; ++k) pbar += p[k];
    pbar /= static_cast<double>(blocks);

    double resid2 = 0.0;
    for (int k = 0; k < blocks; ++k) {
      z[k] += opt.splitting_relax * (p[k] - xbar);
      resid2 += (p[k] - xbar).squaredNorm();
    }
    xbar += opt.splitting_relax * (pbar - xbar);
    out.sweeps = sweep + 1;

    const double resid = std::sqrt(resid2);
    const bool candidate_ok = max_violation(p[0], hs) <= opt.feas_tol;
    if (resid <= opt.splitting_fp_tol * std::max(1.0, xbar.norm()) && candidate_ok) {
      out.X = p[0];
      out.feasible = true;
      return out;
    }
    if ((sweep + 1) % window == 0) {
      const double tr = p[0].trace().real();
      if (candidate_ok && std::abs(tr - trace_at_window) <= 1e-4 * std::abs(tr)) {
        out.X = p[0];
        out.feasible = true;
        return out;
      }
      trace_at_window = candidate_ok ? tr : std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

// Feasibility probe: look for PSD X meeting all half-spaces and, when
// trace_cap >= 0, the extra cap tr(X) <= trace_cap.  Over-relaxed cyclic
// projections from the supplied warm start.
ProbeResult probe(const std::vector<Halfspace>& hs, int dim, double trace_cap,
                  const Eigen::MatrixXcd& warm, const SdpOptions& opt) {
  ProbeResult out;
  out.X = warm.rows() == dim ? hermitian_part(warm)
                             : Eigen::MatrixXcd::Zero(dim, dim).eval();
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    Eigen::MatrixXcd prev = out.X;
    // Half-space projections, over-relaxed.
    for (const auto& h : hs) {
      const double gap = h.b - inner_re(h.P, out.X);
      if (gap > 0.0 && h.norm2 > 0.0) {
        out.X += (opt.over_relax * gap / h.norm2) * h.P;
      }
    }
    // Optional trace cap: tr(X) <= trace_cap is a half-space with P = -I.
    if (trace_cap >= 0.0) {
      const double excess = out.X.trace().real() - trace_cap;
      if (excess > 0.0) {
        out.X -= Eigen::MatrixXcd::Identity(dim, dim) *
                 (opt.over_relax * excess / static_cast<double>(dim));
      }
    }
    // Cone projection (not over-relaxed: keeps iterates PSD so the
    // feasibility check below is meaningful every sweep).
    out.X = project_psd(out.X);
    out.sweeps = sweep + 1;

    double resid = max_violation(out.X, hs);
    if (trace_cap >= 0.0) {
      const double scale = std::max(1.0, trace_cap);
      resid = std::max(resid, (out.X.trace().real() - trace_cap) / scale);
    }
    if (resid <= opt.feas_tol) {
      out.feasible = true;
      return out;
    }
    // Stalled fixed point that is still infeasible: give up early.
    const double move = (out.X - prev).norm();
    if (sweep > 32 && move < 1e-14 * std::max(1.0, out.X.norm())) break;
  }
  return out;
}

}  // namespace

SdpResult solve_min_trace_sdp(const std::vector<SdpConstraint>& constraints, int dim,
                              const SdpOptions& opt) {
  SdpResult res;
  std::vector<Halfspace> hs;
  hs.reserve(constraints.size());
  for (const auto& c : constraints) {
    Halfspace h;
    h.P = hermitian_part(c.P);
    h.b = c.b;
    // Normalise to ||P|| = 1 so the residual tolerance is meaningful
    // regardless of the physical scale of the constraint data.
    const double nrm = h.P.norm();
    if (nrm > 0.0) {
      h.P /= nrm;
      h.b /= nrm;
      h.norm2 = 1.0;
    } else if (h.b > 0.0) {
      return res;  // 0 >= b with positive b: trivially infeasible
    } else {
      continue;  // vacuous constraint
    }
    hs.push_back(std::move(h));
  }

  if (hs.empty()) {  // no binding constraint: the zero matrix is optimal
    res.X = Eigen::MatrixXcd::Zero(dim, dim);
    res.feasible = true;
    return res;
  }

  // Primary path: direct trace minimisation by splitting.
  ProbeResult direct = min_trace_splitting(hs, dim, opt);
  res.sweeps_used += direct.sweeps;
  if (direct.feasible) {
    res.X = std::move(direct.X);
    res.feasible = true;
    res.trace = res.X.trace().real();
    return res;
  }

  // Fallback: feasibility probes plus bisection on a trace cap. Slower but
  // with a different failure surface, and it also certifies infeasibility.
  // Stage 1: unconstrained-trace feasibility.  If this fails the SDP has no
  // feasible point we can find, so report infeasible.
  ProbeResult base = probe(hs, dim, -1.0, Eigen::MatrixXcd(), opt);
  res.sweeps_used += base.sweeps;
  if (!base.feasible) return res;

  // Stage 2: bisection on the trace cap, warm-starting every probe from the
  // last feasible iterate.  lo is always infeasible (or untested), hi feasible.
  double hi = base.X.trace().real();
  double lo = 0.0;
  Eigen::MatrixXcd best = base.X;
  Eigen::MatrixXcd warm = base.X;
  for (int it = 0; it < opt.bisection_steps; ++it) {
    if (hi - lo <= opt.bisection_rel_tol * hi + 1e-30) break;
    const double mid = 0.5 * (lo + hi);
    ProbeResult pr = probe(hs, dim, mid, warm, opt);
    res.sweeps_used += pr.sweeps;
    if (pr.feasible) {
      hi = pr.X.trace().real();
      best = pr.X;
      warm = pr.X;
    } else {
      lo = mid;
    }
  }

  res.X = project_psd(best);
  res.feasible = true;
  res.trace = res.X.trace().real();
  return res;
}

}  // namespace prmo
