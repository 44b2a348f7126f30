#include "prmo/rbfgs.hpp"

#include <cmath>

namespace prmo {

void CorrectionMemory::transport_all(const ProductPoint& target) {
  for (auto& p : pairs_) {
    p.s = transport(target, p.s);
    p.y = transport(target, p.y);
  }
}

bool CorrectionMemory::try_add(const TangentVector& s_raw, const TangentVector& y_raw,
                               double grad_old_norm) {
  if (capacity_ == 0) return false;
  const double sn = norm(s_raw);
  if (sn == 0.0 || !std::isfinite(sn)) return false;

  CorrectionPair p;
  p.s = s_raw;
  scale_in_place(p.s, 1.0 / sn);
  p.y = y_raw;
  scale_in_place(p.y, 1.0 / sn);

  const double sy = inner(p.s, p.y);
  const double ss = inner(p.s, p.s);
  if (sy < kCautiousFactor * ss * grad_old_norm) return false;
  if (sy <= 0.0 || !std::isfinite(sy)) return false;

  p.delta = 1.0 / sy;
  if (static_cast<int>(pairs_.size()) == capacity_) pairs_.pop_front();
  pairs_.push_back(std::move(p));
  return true;
}

TangentVector two_loop_direction(const TangentVector& grad, const CorrectionMemory& mem) {
  const auto& pairs = mem.pairs();
  TangentVector q = grad;
  if (pairs.empty()) {
    scale_in_place(q, -1.0);
    return q;
  }

  const int m = static_cast<int>(pairs.size());
  std::vector<double> rho(m);
  for (int i = m - 1; i >= 0; --i) {  // newest to oldest
    rho[i] = pairs[i].delta * inner(pairs[i].s, q);
    q = add_scaled(q, -rho[i], pairs[i].y);
  }
  const auto& newest = pairs.back();
  const double yy = inner(newest.y, newest.y);
  const double sy = inner(newest.s, newest.y);
  scale_in_place(q, sy / yy);
  for (int i = 0; i < m; ++i) {  // oldest to newest
    const double beta = pairs[i].delta * inner(pairs[i].y, q);
    q = add_scaled(q, rho[i] - beta, pairs[i].s);
  }
  scale_in_place(q, -1.0);
  return q;
}

LineSearchResult armijo_search(const InnerProblem& prob, const ProductPoint& X,
                               double g0, const TangentVector& grad,
                               const TangentVector& d, const InnerOptions& opt) {
  const double slope = inner(grad, d);
  if (slope >= 0.0) {
    throw std::invalid_argument("armijo_search: direction is not a descent direction");
  }
  LineSearchResult res;
  double alpha = opt.tau_init;
  for (int n = 0; n <= opt.backtrack_cap; ++n) {
    bool usable = true;
    ProductPoint Y;
    Evaluation e;
    try {
      Y = retract(X, d, alpha);
      e = prob.eval(Y);
    } catch (const DegenerateRetraction&) {
      usable = false;
    }
    if (usable && std::isfinite(e.g) && e.g <= g0 + opt.armijo_sigma * alpha * slope) {
      res.success = true;
      res.alpha = alpha;
      res.backtracks = n;
      res.X = std::move(Y);
      res.eval = e;
      return res;
    }
    alpha *= opt.backtrack_factor;
  }
  res.success = false;
  res.backtracks = opt.backtrack_cap + 1;
  return res;
}

InnerResult solve_inner(const InnerProblem& prob, ProductPoint X0, const InnerOptions& opt) {
  InnerResult out;
  out.X = std::move(X0);
  out.eval = prob.eval(out.X);
  CorrectionMemory mem(opt.memory);
  TangentVector grad = project_tangent(out.X, prob.euclidean_grad(out.X));
  double grad_norm = norm(grad);

  // Already first-order stationary at the requested tolerance.
  if (grad_norm <= opt.eps) {
    out.trace.push_back({0, out.eval.g, grad_norm, 0.0, 0, out.eval.max_violation, 0});
    return out;
  }

  int stall_run = 0;
  for (int it = 0; it < opt.max_iters; ++it) {
    TangentVector d = two_loop_direction(grad, mem);
    double slope = inner(grad, d);
    if (slope >= 0.0) {  // quasi-Newton direction unusable, fall back to steepest descent
      d = grad;
      scale_in_place(d, -1.0);
      slope = -grad_norm * grad_norm;
    }
    if (!(slope < 0.0)) {  // stationary point (grad = 0): nothing to do
      out.trace.push_back({it + 1, out.eval.g, grad_norm, 0.0, 0, out.eval.max_violation,
                           mem.size()});
      out.iters = it + 1;
      return out;
    }

    const LineSearchResult ls = armijo_search(prob, out.X, out.eval.g, grad, d, opt);
    if (!ls.success) {
      out.stalled = true;
      out.iters = it;
      return out;
    }

    const double disp = displacement(ls.X, out.X);
    TangentVector grad_new = project_tangent(ls.X, prob.euclidean_grad(ls.X));

    // Curvature pair at the new point: S = transported step, Y = gradient
    // difference after transporting the old gradient forward.
    TangentVector step = d;
    scale_in_place(step, ls.alpha);
    const TangentVector s_raw = transport(ls.X, step);
    const TangentVector y_raw = add_scaled(grad_new, -1.0, transport(ls.X, grad));
    mem.transport_all(ls.X);
    mem.try_add(s_raw, y_raw, grad_norm);

    out.X = ls.X;
    out.eval = ls.eval;
    grad = std::move(grad_new);
    grad_norm = norm(grad);
    out.trace.push_back({it + 1, out.eval.g, grad_norm, ls.alpha, ls.backtracks,
                         out.eval.max_violation, mem.size()});
    out.iters = it + 1;
    // Primary stop: first-order stationarity. The displacement test is only
    // a stall safeguard — a heavily backtracked step can be tiny long before
    // the gradient is anywhere near zero. One crushed step is not a stall:
    // the first iterations of a run start from an unscaled direction and
    // recover once curvature pairs accumulate. Two consecutive crushed steps
    // mean the line search cannot move in any direction it is offered.
    if (grad_norm <= opt.eps) break;
    const bool crushed = ls.backtracks > 0 && disp <= opt.eps * opt.stall_factor;
    stall_run = crushed ? stall_run + 1 : 0;
    if (stall_run >= 2) break;
  }
  return out;
}

}  // namespace prmo
